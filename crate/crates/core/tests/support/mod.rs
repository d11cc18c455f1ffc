//! Full-space oracles: the XY chain on all 2^N spin configurations, built
//! without the excitation basis. Bit `s - 1` of a configuration is site `s`.

#![allow(dead_code)]

use num_complex::Complex64;
use spinline::basis::{Basis, BasisIndex};
use spinline::evolution::StateVector;
use spinline::layout::CouplingLayout;
use spinline::receiver::InitialStateSpec;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Open chain with the given bond strengths, receiver and senders.
pub fn chain(strengths: &[f64], receiver: usize, senders: &[(usize, usize)]) -> CouplingLayout {
    let bonds: Vec<(usize, usize, f64)> = strengths.iter().enumerate().map(|(k, &w)| (k + 1, k + 2, w)).collect();
    let doc = serde_json::json!({
        "topology": "single_channel",
        "n1": strengths.len() + 1,
        "deltas": [null, null, null],
        "bonds": bonds,
        "receiver": receiver,
        "senders": senders,
    });
    CouplingLayout::from_json(&doc.to_string()).expect("valid test chain")
}

/// Sparse XY Hamiltonian on the full space: `D/2` for every flip
/// `|..01..> <-> |..10..>` across a bond of strength `D`.
pub struct FullHamiltonian {
    pub n: usize,
    bonds: Vec<(usize, f64)>,
}

impl FullHamiltonian {
    pub fn new(layout: &CouplingLayout) -> Self {
        let bonds = layout.bonds().map(|(i, _, w)| (i - 1, w)).collect();
        Self { n: layout.n_sites(), bonds }
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; psi.len()];
        for (x, &a) in psi.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for &(b, w) in &self.bonds {
                let (lo, hi) = ((x >> b) & 1, (x >> (b + 1)) & 1);
                if lo != hi {
                    out[x ^ (0b11 << b)] += a * (0.5 * w);
                }
            }
        }
        out
    }

    /// `exp(-iHt) psi` by Taylor series on steps of length at most 0.2.
    pub fn propagate(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let steps = (t.abs() / 0.2).ceil().max(1.0) as usize;
        let dt = t / steps as f64;
        let mut state = psi.to_vec();
        for _ in 0..steps {
            let mut term = state.clone();
            let mut acc = state.clone();
            for k in 1..60 {
                let h = self.apply(&term);
                let f = Complex64::new(0.0, -dt / k as f64);
                term = h.into_iter().map(|v| v * f).collect();
                let size: f64 = term.iter().map(|v| v.norm_sqr()).sum();
                for (a, v) in acc.iter_mut().zip(&term) {
                    *a += v;
                }
                if size < 1e-36 {
                    break;
                }
            }
            state = acc;
        }
        state
    }
}

pub fn bit(site: usize) -> usize {
    1 << (site - 1)
}

/// Embeds an excitation-basis state into the full space.
pub fn embed(psi: &StateVector, basis: &Basis) -> Vec<Complex64> {
    let mut full = vec![ZERO; 1 << basis.n_sites()];
    for state in basis.iter() {
        let (x, a) = match state {
            BasisIndex::Vacuum => (0, psi.vacuum),
            BasisIndex::Single(i) => (bit(i), psi.singles[i - 1]),
            BasisIndex::Pair(i, j) => (bit(i) | bit(j), psi.pairs[basis.pair_offset(i, j).expect("valid pair")]),
        };
        full[x] = a;
    }
    full
}

/// Product state of the two senders with every other spin down.
pub fn product_state(spec: &InitialStateSpec, layout: &CouplingLayout) -> Vec<Complex64> {
    let n = layout.n_sites();
    let one = |a: [Complex64; 3], sites: (usize, usize)| [(0usize, a[0]), (bit(sites.0), a[1]), (bit(sites.1), a[2])];
    let s1 = one(spec.sender1.amplitudes(), layout.sender1());
    let s2 = one(spec.sender2.amplitudes(), layout.sender2().expect("two senders"));
    let mut full = vec![ZERO; 1 << n];
    for &(x, a) in &s1 {
        for &(y, b) in &s2 {
            full[x | y] += a * b;
        }
    }
    full
}

/// `(rho00, rho11, rho01)` of one site, by summing over the rest.
pub fn partial_trace(full: &[Complex64], site: usize) -> (f64, f64, Complex64) {
    let m = bit(site);
    let (mut r11, mut r01, mut r00) = (0.0, ZERO, 0.0);
    for (x, a) in full.iter().enumerate() {
        if x & m == 0 {
            r00 += a.norm_sqr();
            r01 += a * full[x | m].conj();
        } else {
            r11 += a.norm_sqr();
        }
    }
    (r00, r11, r01)
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
