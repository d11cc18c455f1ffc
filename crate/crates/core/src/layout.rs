//! Coupling layouts for the four chain topologies and the Hamiltonian
//! blocks they produce in the excitation basis.
//!
//! Every layout is an open nearest-neighbor XY chain
//! `H = sum_i D_i (I^x_i I^x_{i+1} + I^y_i I^y_{i+1})`
//! with the bulk coupling set to 1 (time is measured in units of `1/D`).
//! In the excitation basis each bond of strength `D_i` is a hopping term
//! with amplitude `D_i / 2`.

use faer::Mat;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::Basis;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    SingleChannel,
    Asymmetric,
    Symmetric,
    Minimal5,
}

/// A weighted open chain together with its sender and receiver sites.
///
/// Sender site pairs are ordered as `(site of a_i1, site of a_i2)`, so for the
/// second sender this is `(N, N-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingLayout {
    topology: Topology,
    n1: usize,
    deltas: [Option<f64>; 3],
    /// `strengths[k]` couples sites `k+1` and `k+2`.
    strengths: Vec<f64>,
    receiver: usize,
    sender1: (usize, usize),
    sender2: Option<(usize, usize)>,
}

fn check_couplings(values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        None => Ok(()),
        Some(v) => Err(Error::Topology(format!("coupling strength {v} must be finite and nonnegative"))),
    }
}

fn check_channel(n1: usize) -> Result<()> {
    if n1 < 6 {
        Err(Error::Topology(format!(
            "channel length {n1} is too short; boundary bonds collide below 6 sites"
        )))
    } else {
        Ok(())
    }
}

impl CouplingLayout {
    /// Two `n1`-site boundary-controlled channels joined by a `delta3` bond,
    /// receiver at the end of the first channel (site `n1`).
    pub fn asymmetric(n1: usize, delta1: f64, delta2: f64, delta3: f64) -> Result<Self> {
        check_channel(n1)?;
        check_couplings(&[delta1, delta2, delta3])?;
        let n = 2 * n1;
        let mut s = vec![1.0; n - 1];
        for (a, w) in [
            (1, delta1),
            (n1 - 1, delta1),
            (n1 + 1, delta1),
            (2 * n1 - 1, delta1),
            (2, delta2),
            (n1 - 2, delta2),
            (n1 + 2, delta2),
            (2 * n1 - 2, delta2),
            (n1, delta3),
        ] {
            s[a - 1] = w;
        }
        Ok(Self {
            topology: Topology::Asymmetric,
            n1,
            deltas: [Some(delta1), Some(delta2), Some(delta3)],
            strengths: s,
            receiver: n1,
            sender1: (1, 2),
            sender2: Some((n, n - 1)),
        })
    }

    /// Two equivalent channels with the receiver inserted between them
    /// (site `n1 + 1` of `2 n1 + 1`).
    pub fn symmetric(n1: usize, delta1: f64, delta2: f64, delta3: f64) -> Result<Self> {
        check_channel(n1)?;
        check_couplings(&[delta1, delta2, delta3])?;
        let n = 2 * n1 + 1;
        let mut s = vec![1.0; n - 1];
        for (a, w) in [
            (1, delta1),
            (n1 - 1, delta1),
            (n1 + 2, delta1),
            (2 * n1, delta1),
            (2, delta2),
            (n1 - 2, delta2),
            (n1 + 3, delta2),
            (2 * n1 - 1, delta2),
            (n1, delta3),
            (n1 + 1, delta3),
        ] {
            s[a - 1] = w;
        }
        Ok(Self {
            topology: Topology::Symmetric,
            n1,
            deltas: [Some(delta1), Some(delta2), Some(delta3)],
            strengths: s,
            receiver: n1 + 1,
            sender1: (1, 2),
            sender2: Some((n, n - 1)),
        })
    }

    /// Both senders coupled directly to the receiver: `1 - 2 =δ3= 3 =δ3= 4 - 5`.
    pub fn minimal5(delta3: f64) -> Result<Self> {
        if !(delta3.is_finite() && delta3 > 0.0) {
            return Err(Error::Topology(format!("delta3 = {delta3} must be positive")));
        }
        Ok(Self {
            topology: Topology::Minimal5,
            n1: 2,
            deltas: [None, None, Some(delta3)],
            strengths: vec![1.0, delta3, delta3, 1.0],
            receiver: 3,
            sender1: (1, 2),
            sender2: Some((5, 4)),
        })
    }

    /// A single boundary-controlled channel, the building block of the lines.
    /// Its "receiver" is the far end, site `n1`.
    pub fn single_channel(n1: usize, delta1: f64, delta2: f64) -> Result<Self> {
        check_channel(n1)?;
        check_couplings(&[delta1, delta2])?;
        let mut s = vec![1.0; n1 - 1];
        s[0] = delta1;
        s[n1 - 2] = delta1;
        s[1] = delta2;
        s[n1 - 3] = delta2;
        Ok(Self {
            topology: Topology::SingleChannel,
            n1,
            deltas: [Some(delta1), Some(delta2), None],
            strengths: s,
            receiver: n1,
            sender1: (1, 2),
            sender2: None,
        })
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n_sites(&self) -> usize {
        self.strengths.len() + 1
    }

    pub fn deltas(&self) -> [Option<f64>; 3] {
        self.deltas
    }

    pub fn receiver(&self) -> usize {
        self.receiver
    }

    pub fn sender1(&self) -> (usize, usize) {
        self.sender1
    }

    pub fn sender2(&self) -> Option<(usize, usize)> {
        self.sender2
    }

    /// Strength of the bond `(i, i+1)`, 1-based.
    pub fn bond(&self, i: usize) -> Option<f64> {
        i.checked_sub(1).and_then(|k| self.strengths.get(k)).copied()
    }

    /// `(i, i+1, strength)` in 1-based sites.
    pub fn bonds(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.strengths.iter().enumerate().map(|(k, &w)| (k + 1, k + 2, w))
    }

    pub(crate) fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    /// True when the relabeling `i -> N + 1 - i` maps the bond list onto itself.
    pub fn is_mirror_symmetric(&self) -> bool {
        self.strengths.iter().eq(self.strengths.iter().rev())
    }

    /// Hex SHA-256 over the chain length and the exact bit patterns of the bonds.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_sites() as u64).to_le_bytes());
        for w in &self.strengths {
            h.update(w.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_document(&self) -> LayoutDocument {
        LayoutDocument {
            topology: self.topology,
            n1: self.n1,
            deltas: self.deltas,
            bonds: self.bonds().collect(),
            receiver: self.receiver,
            senders: std::iter::once(self.sender1).chain(self.sender2).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<LayoutDocument>(text)?.try_into()
    }
}

/// Serialized form of a [`CouplingLayout`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutDocument {
    pub topology: Topology,
    pub n1: usize,
    pub deltas: [Option<f64>; 3],
    pub bonds: Vec<(usize, usize, f64)>,
    pub receiver: usize,
    pub senders: Vec<(usize, usize)>,
}

impl TryFrom<LayoutDocument> for CouplingLayout {
    type Error = Error;

    fn try_from(doc: LayoutDocument) -> Result<Self> {
        let n = doc.bonds.len() + 1;
        if n < 2 {
            return Err(Error::Topology("a layout needs at least one bond".into()));
        }
        let mut strengths = Vec::with_capacity(n - 1);
        for (k, &(i, j, w)) in doc.bonds.iter().enumerate() {
            if i != k + 1 || j != k + 2 {
                return Err(Error::Topology(format!(
                    "bond #{k} is ({i}, {j}); bonds must be consecutive nearest neighbors"
                )));
            }
            strengths.push(w);
        }
        check_couplings(&strengths)?;
        let in_range = |s: usize| (1..=n).contains(&s);
        let senders_ok = doc.senders.iter().all(|&(a, b)| in_range(a) && in_range(b) && a != b);
        if !in_range(doc.receiver) || !senders_ok || doc.senders.is_empty() || doc.senders.len() > 2
        {
            return Err(Error::Topology("sender/receiver sites out of range".into()));
        }
        Ok(Self {
            topology: doc.topology,
            n1: doc.n1,
            deltas: doc.deltas,
            strengths,
            receiver: doc.receiver,
            sender1: doc.senders[0],
            sender2: doc.senders.get(1).copied(),
        })
    }
}

/// The one- and two-excitation blocks of the XY Hamiltonian.
/// The vacuum block is the scalar 0 and is not stored.
#[derive(Debug, Clone)]
pub struct HamiltonianBlocks {
    pub h1: Mat<f64>,
    pub h2: Mat<f64>,
}

impl HamiltonianBlocks {
    pub fn n_sites(&self) -> usize {
        self.h1.nrows()
    }
}

/// One-excitation block only; the fermionic fast path needs nothing else.
pub fn assemble_one_block(layout: &CouplingLayout) -> Mat<f64> {
    let n = layout.n_sites();
    let mut h1 = Mat::<f64>::zeros(n, n);
    for (k, &w) in layout.strengths().iter().enumerate() {
        h1[(k, k + 1)] = 0.5 * w;
        h1[(k + 1, k)] = 0.5 * w;
    }
    h1
}

pub fn assemble_blocks(layout: &CouplingLayout, basis: &Basis) -> Result<HamiltonianBlocks> {
    let n = layout.n_sites();
    if basis.n_sites() != n {
        return Err(Error::Dimension(format!(
            "basis has {} sites, layout has {n}",
            basis.n_sites()
        )));
    }
    let h1 = assemble_one_block(layout);
    let d2 = basis.dim_two();
    let w = layout.strengths();
    let mut h2 = Mat::<f64>::zeros(d2, d2);
    for (row, &(a, b)) in basis.pairs0().iter().enumerate() {
        // Move each excitation to an empty neighboring site.
        for (moving, other) in [(a, b), (b, a)] {
            if moving > 0 && moving - 1 != other {
                let col = basis.pair0_unordered(moving - 1, other);
                h2[(row, col)] = 0.5 * w[moving - 1];
            }
            if moving + 1 < n && moving + 1 != other {
                let col = basis.pair0_unordered(moving + 1, other);
                h2[(row, col)] = 0.5 * w[moving];
            }
        }
    }
    Ok(HamiltonianBlocks { h1, h2 })
}

/// Named parameter sets: Table-1 asymmetric lines, the optimized symmetric
/// line and the minimal five-site system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub topology: Topology,
    pub n1: usize,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub delta3: f64,
    pub t0: f64,
}

pub const ASYM_N20: Preset = Preset {
    name: "asym-n20",
    topology: Topology::Asymmetric,
    n1: 20,
    delta1: Some(0.550),
    delta2: Some(0.817),
    delta3: 0.28,
    t0: 28.0,
};

pub const ASYM_N60: Preset = Preset {
    name: "asym-n60",
    topology: Topology::Asymmetric,
    n1: 60,
    delta1: Some(0.414),
    delta2: Some(0.720),
    delta3: 0.20,
    t0: 72.45,
};

/// `delta3` is the optimized link value, not an approximation of `1/pi`.
#[allow(clippy::approx_constant)]
pub const SYM_N20: Preset = Preset {
    name: "sym-n20",
    topology: Topology::Symmetric,
    n1: 20,
    delta1: Some(0.550),
    delta2: Some(0.817),
    delta3: 0.318,
    t0: 29.190,
};

pub const MINIMAL5: Preset = Preset {
    name: "minimal5",
    topology: Topology::Minimal5,
    n1: 2,
    delta1: None,
    delta2: None,
    delta3: 0.707,
    t0: 4.443,
};

pub const PRESETS: [Preset; 4] = [ASYM_N20, ASYM_N60, SYM_N20, MINIMAL5];

pub fn preset(name: &str) -> Option<Preset> {
    PRESETS.iter().copied().find(|p| p.name == name)
}

impl Preset {
    pub fn layout(&self) -> Result<CouplingLayout> {
        let (d1, d2) = (self.delta1.unwrap_or(1.0), self.delta2.unwrap_or(1.0));
        match self.topology {
            Topology::Asymmetric => CouplingLayout::asymmetric(self.n1, d1, d2, self.delta3),
            Topology::Symmetric => CouplingLayout::symmetric(self.n1, d1, d2, self.delta3),
            Topology::Minimal5 => CouplingLayout::minimal5(self.delta3),
            Topology::SingleChannel => CouplingLayout::single_channel(self.n1, d1, d2),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_one_layouts() {
        let l = CouplingLayout::asymmetric(20, 0.550, 0.817, 0.28).unwrap();
        assert_eq!(l.n_sites(), 40);
        assert_eq!(l.bond(20), Some(0.28));
        assert_eq!(l.receiver(), 20);
        assert_eq!(l.sender2(), Some((40, 39)));
        for i in [1, 19, 21, 39] {
            assert_eq!(l.bond(i), Some(0.550), "bond {i}");
        }
        for i in [2, 18, 22, 38] {
            assert_eq!(l.bond(i), Some(0.817), "bond {i}");
        }
        assert_eq!(l.bonds().filter(|b| b.2 == 1.0).count(), 39 - 9);

        let l = CouplingLayout::asymmetric(60, 0.414, 0.720, 0.20).unwrap();
        assert_eq!(l.n_sites(), 120);
        assert_eq!(l.bond(1), Some(0.414));
    }

    #[test]
    fn uniform_degenerate_choices() {
        let l = CouplingLayout::asymmetric(6, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(l.n_sites(), 12);
        assert!(l.bonds().all(|b| b.2 == 1.0));
        let l = CouplingLayout::symmetric(6, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(l.n_sites(), 13);
        assert!(l.bonds().all(|b| b.2 == 1.0));
        let l = CouplingLayout::single_channel(6, 1.0, 1.0).unwrap();
        assert!(l.bonds().all(|b| b.2 == 1.0));
        let l = CouplingLayout::minimal5(1.0).unwrap();
        assert!(l.bonds().all(|b| b.2 == 1.0));
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn symmetric_line() {
        let l = CouplingLayout::symmetric(20, 0.550, 0.817, 0.318).unwrap();
        assert_eq!(l.n_sites(), 41);
        assert_eq!(l.receiver(), 21);
        assert_eq!(l.bond(20), Some(0.318));
        assert_eq!(l.bond(21), Some(0.318));
        assert_eq!(l.sender2(), Some((41, 40)));
        assert!(l.is_mirror_symmetric());
    }

    #[test]
    fn minimal_and_single_channel() {
        let l = CouplingLayout::minimal5(0.707).unwrap();
        assert_eq!(l.bond(2), Some(0.707));
        assert_eq!(l.bonds().count(), 4);
        assert!(l.is_mirror_symmetric());
        assert!(CouplingLayout::minimal5(-1.0).is_err());

        let c = CouplingLayout::single_channel(20, 0.550, 0.817).unwrap();
        assert_eq!(c.bond(18), Some(0.817));
        assert_eq!(c.bond(19), Some(0.550));
        assert_eq!(c.bonds().count(), 19);
    }

    #[test]
    fn short_channels_rejected() {
        assert!(matches!(CouplingLayout::asymmetric(5, 1.0, 1.0, 1.0), Err(Error::Topology(_))));
        assert!(CouplingLayout::symmetric(4, 1.0, 1.0, 1.0).is_err());
        assert!(CouplingLayout::single_channel(3, 1.0, 1.0).is_err());
        assert!(CouplingLayout::asymmetric(8, f64::NAN, 1.0, 1.0).is_err());
        assert!(CouplingLayout::asymmetric(8, 0.5, 1.0, -1.0).is_err());
        assert!(CouplingLayout::asymmetric(8, 0.5, 1.0, 0.0).is_ok());
    }

    #[test]
    fn two_site_block() {
        let l = CouplingLayout {
            topology: Topology::SingleChannel,
            n1: 2,
            deltas: [None; 3],
            strengths: vec![1.0],
            receiver: 2,
            sender1: (1, 2),
            sender2: None,
        };
        let b = assemble_blocks(&l, &Basis::new(2).unwrap()).unwrap();
        assert_eq!(b.h1[(0, 1)], 0.5);
        assert_eq!(b.h1[(1, 0)], 0.5);
        assert_eq!(b.h1[(0, 0)], 0.0);
        assert_eq!(b.h2[(0, 0)], 0.0);
    }

    #[test]
    fn preset_block_elements() {
        let l = ASYM_N20.layout().unwrap();
        let b = assemble_blocks(&l, &Basis::new(40).unwrap()).unwrap();
        assert!((b.h1[(0, 1)] - 0.275).abs() < 1e-15);

        let l = CouplingLayout::minimal5(0.707).unwrap();
        let basis = Basis::new(5).unwrap();
        let b = assemble_blocks(&l, &basis).unwrap();
        let p13 = basis.pair_offset(1, 3).unwrap();
        let p14 = basis.pair_offset(1, 4).unwrap();
        assert!((b.h2[(p13, p14)] - 0.3535).abs() < 1e-15);
        for i in 0..b.h2.nrows() {
            for j in 0..b.h2.ncols() {
                assert_eq!(b.h2[(i, j)], b.h2[(j, i)]);
            }
        }
    }

    #[test]
    fn size_mismatch() {
        let l = CouplingLayout::minimal5(1.0).unwrap();
        assert!(matches!(assemble_blocks(&l, &Basis::new(6).unwrap()), Err(Error::Dimension(_))));
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let l = SYM_N20.layout().unwrap();
        let back = CouplingLayout::from_json(&l.to_json().unwrap()).unwrap();
        assert_eq!(back, l);
        assert_eq!(back.fingerprint(), l.fingerprint());

        let mut doc = l.to_document();
        doc.bonds[3].1 = 7;
        let text = serde_json::to_string(&doc).unwrap();
        assert!(CouplingLayout::from_json(&text).is_err());
    }

    #[test]
    fn presets_are_named() {
        let names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
        assert_eq!(names, ["asym-n20", "asym-n60", "sym-n20", "minimal5"]);
        assert_eq!(preset("sym-n20").unwrap().t0, 29.190);
        assert!(preset("nope").is_none());
    }
}
