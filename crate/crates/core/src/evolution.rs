//! Exact time evolution in the vacuum, one- and two-excitation sectors.
//!
//! The XY Hamiltonian conserves the number of excitations, so each sector
//! evolves on its own: `c(t) = V exp(-iEt) V^T c(0)` with the spectral data of
//! that sector's block. The vacuum has zero energy and never changes.
//!
//! For an open nearest-neighbor chain the two-excitation dynamics is also
//! fixed by the one-excitation propagator `G(t)` alone (free fermions after a
//! Jordan-Wigner transformation): the amplitude of the ordered pair `(i, j)`
//! picks up the 2x2 minor `G_ik G_jl - G_il G_jk` from each initial pair `(k, l)`.

use num_complex::Complex64;

use crate::basis::{Basis, BasisIndex};
use crate::error::{Error, Result};
use crate::layout::{assemble_blocks, assemble_one_block, CouplingLayout, HamiltonianBlocks};
use crate::linalg::{CMatrix, Spectrum};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Amplitudes over the excitation basis, split by sector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub vacuum: Complex64,
    pub singles: Vec<Complex64>,
    pub pairs: Vec<Complex64>,
}

impl StateVector {
    pub fn zeros(basis: &Basis) -> Self {
        Self { vacuum: ZERO, singles: vec![ZERO; basis.dim_one()], pairs: vec![ZERO; basis.dim_two()] }
    }

    pub fn basis_state(basis: &Basis, state: BasisIndex) -> Result<Self> {
        Self::superposition(basis, &[(state, Complex64::new(1.0, 0.0))])
    }

    /// `sum_k w_k |s_k>`, not renormalized.
    pub fn superposition(basis: &Basis, terms: &[(BasisIndex, Complex64)]) -> Result<Self> {
        let mut psi = Self::zeros(basis);
        for &(s, w) in terms {
            *psi.amplitude_mut(basis, s)? += w;
        }
        Ok(psi)
    }

    pub fn amplitude(&self, basis: &Basis, state: BasisIndex) -> Result<Complex64> {
        Ok(match state {
            BasisIndex::Vacuum => self.vacuum,
            BasisIndex::Single(k) => {
                basis.check_site(k)?;
                self.singles[k - 1]
            }
            BasisIndex::Pair(i, j) => self.pairs[basis.pair_offset(i, j)?],
        })
    }

    pub fn amplitude_mut(&mut self, basis: &Basis, state: BasisIndex) -> Result<&mut Complex64> {
        Ok(match state {
            BasisIndex::Vacuum => &mut self.vacuum,
            BasisIndex::Single(k) => {
                basis.check_site(k)?;
                &mut self.singles[k - 1]
            }
            BasisIndex::Pair(i, j) => &mut self.pairs[basis.pair_offset(i, j)?],
        })
    }

    /// Squared norms of the vacuum, single and pair sectors.
    pub fn sector_norms(&self) -> [f64; 3] {
        [
            self.vacuum.norm_sqr(),
            self.singles.iter().map(|c| c.norm_sqr()).sum(),
            self.pairs.iter().map(|c| c.norm_sqr()).sum(),
        ]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.sector_norms().iter().sum()
    }

    pub fn normalized(mut self) -> Self {
        let s = self.norm_sqr().sqrt();
        if s > 0.0 {
            self.vacuum /= s;
            self.singles.iter_mut().for_each(|c| *c /= s);
            self.pairs.iter_mut().for_each(|c| *c /= s);
        }
        self
    }

    /// The image under the site relabeling `i -> N + 1 - i`.
    pub fn mirrored(&self, basis: &Basis) -> Self {
        let n = basis.n_sites();
        let mut out = Self::zeros(basis);
        out.vacuum = self.vacuum;
        for k in 0..n {
            out.singles[n - 1 - k] = self.singles[k];
        }
        for (off, &(a, b)) in basis.pairs0().iter().enumerate() {
            out.pairs[basis.pair0(n - 1 - b, n - 1 - a)] = self.pairs[off];
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let sectors = [(&self.singles, &other.singles), (&self.pairs, &other.pairs)];
        sectors
            .iter()
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()))
            .fold((self.vacuum - other.vacuum).norm(), f64::max)
    }

    fn check_dims(&self, n: usize, d2: usize) -> Result<()> {
        if self.singles.len() != n || self.pairs.len() != d2 {
            return Err(Error::Dimension(format!(
                "state has ({}, {}) amplitudes, propagator expects ({n}, {d2})",
                self.singles.len(),
                self.pairs.len()
            )));
        }
        Ok(())
    }
}

impl HamiltonianBlocks {
    /// `<psi|H|psi>`.
    pub fn energy(&self, psi: &StateVector) -> f64 {
        fn quad(h: &faer::Mat<f64>, c: &[Complex64]) -> f64 {
            let mut acc = ZERO;
            for i in 0..c.len() {
                if c[i] == ZERO {
                    continue;
                }
                let mut hc = ZERO;
                for j in 0..c.len() {
                    hc += c[j] * h[(i, j)];
                }
                acc += c[i].conj() * hc;
            }
            acc.re
        }
        quad(&self.h1, &psi.singles) + quad(&self.h2, &psi.pairs)
    }
}

/// Spectral data of the excitation blocks of one layout.
///
/// The two-excitation spectrum is optional: the fermionic route only needs
/// the one-excitation block, and at `N = 120` the pair block is 7140 x 7140.
#[derive(Debug, Clone)]
pub struct BlockPropagator {
    pub(crate) n_sites: usize,
    pub(crate) one: Spectrum,
    pub(crate) two: Option<Spectrum>,
    pub(crate) fingerprint: String,
}

/// Which sectors [`BlockPropagator::for_layout`] diagonalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sectors {
    OneOnly,
    Both,
}

/// Diagonalize both blocks.
pub fn diagonalize(blocks: &HamiltonianBlocks) -> Result<BlockPropagator> {
    let one = Spectrum::of_symmetric(&blocks.h1, "one-excitation")?;
    let two = Spectrum::of_symmetric(&blocks.h2, "two-excitation")?;
    let n = blocks.n_sites();
    if two.dim() != n * (n - 1) / 2 {
        return Err(Error::Dimension(format!("pair block has dimension {}", two.dim())));
    }
    Ok(BlockPropagator { n_sites: n, fingerprint: fingerprint_of_h1(&blocks.h1), one, two: Some(two) })
}

pub(crate) fn fingerprint_of_h1(h1: &faer::Mat<f64>) -> String {
    use sha2::{Digest, Sha256};
    let n = h1.nrows();
    let mut h = Sha256::new();
    h.update((n as u64).to_le_bytes());
    for k in 0..n.saturating_sub(1) {
        h.update((2.0 * h1[(k, k + 1)]).to_bits().to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl BlockPropagator {
    pub fn for_layout(layout: &CouplingLayout, sectors: Sectors) -> Result<Self> {
        match sectors {
            Sectors::Both => {
                let basis = Basis::new(layout.n_sites())?;
                diagonalize(&assemble_blocks(layout, &basis)?)
            }
            Sectors::OneOnly => {
                let h1 = assemble_one_block(layout);
                Ok(Self {
                    n_sites: layout.n_sites(),
                    one: Spectrum::of_symmetric(&h1, "one-excitation")?,
                    two: None,
                    fingerprint: layout.fingerprint(),
                })
            }
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn one_excitation(&self) -> &Spectrum {
        &self.one
    }

    pub fn two_excitation(&self) -> Option<&Spectrum> {
        self.two.as_ref()
    }

    pub(crate) fn require_two(&self) -> Result<&Spectrum> {
        self.two.as_ref().ok_or_else(|| {
            Error::Dimension("two-excitation sector was not diagonalized for this propagator".into())
        })
    }

    /// `<to| exp(-iHt) |from>` in the one-excitation sector, 1-based sites.
    pub fn transfer_amplitude(&self, from: usize, to: usize, t: f64) -> Result<Complex64> {
        for site in [from, to] {
            if site == 0 || site > self.n_sites {
                return Err(Error::Site { site, n: self.n_sites });
            }
        }
        let (a, b) = (to - 1, from - 1);
        let v = &self.one.vectors;
        Ok(self
            .one
            .values
            .iter()
            .enumerate()
            .map(|(k, &e)| Complex64::from_polar(v[(a, k)] * v[(b, k)], -e * t))
            .sum())
    }

    pub fn transfer_probability(&self, from: usize, to: usize, t: f64) -> Result<f64> {
        Ok(self.transfer_amplitude(from, to, t)?.norm_sqr())
    }
}

/// Evolve every sector of `psi0` by `exp(-iHt)` with dense spectral data.
pub fn evolve(prop: &BlockPropagator, psi0: &StateVector, t: f64) -> Result<StateVector> {
    let two = prop.require_two()?;
    psi0.check_dims(prop.n_sites, two.dim())?;
    Ok(StateVector {
        vacuum: psi0.vacuum,
        singles: prop.one.apply(t, &psi0.singles),
        pairs: two.apply(t, &psi0.pairs),
    })
}

/// `G(t) = V1 exp(-i E1 t) V1^T`.
pub fn one_excitation_propagator(prop: &BlockPropagator, t: f64) -> CMatrix {
    prop.one.propagator(t)
}

/// Two-excitation amplitudes at time `t` from the one-excitation propagator
/// `G(t)`, summing only over the nonzero initial pairs.
pub fn two_excitation_fast(g: &CMatrix, pairs0: &[Complex64], basis: &Basis) -> Result<Vec<Complex64>> {
    let n = basis.n_sites();
    if g.rows() != n || g.cols() != n || pairs0.len() != basis.dim_two() {
        return Err(Error::Dimension(format!(
            "propagator {}x{} and {} pair amplitudes for a {n}-site basis",
            g.rows(),
            g.cols(),
            pairs0.len()
        )));
    }
    let mut out = vec![ZERO; basis.dim_two()];
    for (&(k, l), &c) in basis.pairs0().iter().zip(pairs0) {
        if c == ZERO {
            continue;
        }
        for (o, &(i, j)) in out.iter_mut().zip(basis.pairs0()) {
            *o += (g[(i, k)] * g[(j, l)] - g[(i, l)] * g[(j, k)]) * c;
        }
    }
    Ok(out)
}

/// Evolve with the fermionic route: singles through `G(t)`, pairs through its minors.
pub fn evolve_fast(prop: &BlockPropagator, psi0: &StateVector, t: f64) -> Result<StateVector> {
    let basis = Basis::new(prop.n_sites)?;
    psi0.check_dims(prop.n_sites, basis.dim_two())?;
    let g = prop.one.propagator(t);
    Ok(StateVector {
        vacuum: psi0.vacuum,
        singles: prop.one.apply(t, &psi0.singles),
        pairs: two_excitation_fast(&g, &psi0.pairs, &basis)?,
    })
}

/// `|<to| exp(-iHt) |from>|^2` for a one-excitation transfer along `layout`.
pub fn transfer_probability(layout: &CouplingLayout, from: usize, to: usize, t: f64) -> Result<f64> {
    BlockPropagator::for_layout(layout, Sectors::OneOnly)?.transfer_probability(from, to, t)
}
