//! The map from sender initial states to the receiver density matrix at a
//! fixed registration time.
//!
//! Initial states populate at most nine basis amplitudes (vacuum, four
//! singles on sender sites, four sender-sender pairs), and the receiver's
//! reduced state only reads the amplitudes `c_r` and `c_{k,r}`. A
//! [`ReceiverMap`] therefore stores just the propagator entries linking those
//! few initial amplitudes to the receiver-related final ones; evaluating a
//! new initial state costs `O(N)`.

use num_complex::Complex64;

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::evolution::BlockPropagator;
use crate::layout::CouplingLayout;
use crate::receiver::{decompose_receiver, BranchPolicy, Density2, InitialStateSpec, ReceiverState};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// How the two-excitation propagator entries are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Route {
    /// Minors of the one-excitation propagator (exact for open XY chains).
    #[default]
    FreeFermion,
    /// Dense spectral decomposition of the pair block.
    Dense,
}

#[derive(Debug, Clone)]
pub struct ReceiverMap {
    n_sites: usize,
    receiver: usize,
    t: f64,
    /// `singles[k][m] = G(t)[k, sender site m]`, senders ordered `s1a, s1b, s2a, s2b`.
    singles: Vec<[Complex64; 4]>,
    /// `pairs[k][p]`: amplitude on the pair `{k, r}` from initial pair `p`,
    /// ordered `(s1a,s2a), (s1a,s2b), (s1b,s2a), (s1b,s2b)`. Zero at `k = r`.
    pairs: Vec<[Complex64; 4]>,
}

impl ReceiverMap {
    pub fn new(layout: &CouplingLayout, prop: &BlockPropagator, t: f64, route: Route) -> Result<Self> {
        let n = layout.n_sites();
        if prop.n_sites() != n || prop.fingerprint() != layout.fingerprint() {
            return Err(Error::Dimension("propagator was built for a different layout".into()));
        }
        let (s1a, s1b) = layout.sender1();
        let (s2a, s2b) = layout
            .sender2()
            .ok_or_else(|| Error::Topology("layout has no second sender".into()))?;
        let r = layout.receiver() - 1;
        let senders = [s1a - 1, s1b - 1, s2a - 1, s2b - 1];
        if senders.contains(&r) {
            return Err(Error::Topology("sender sites overlap the receiver".into()));
        }
        let one = prop.one_excitation();
        let phases = one.phases(t);
        let singles: Vec<[Complex64; 4]> = (0..n)
            .map(|k| senders.map(|m| one.propagator_entry(&phases, k, m)))
            .collect();
        let initial_pairs = [(senders[0], senders[2]), (senders[0], senders[3]), (senders[1], senders[2]), (senders[1], senders[3])]
            .map(|(x, y)| if x < y { (x, y) } else { (y, x) });
        // Position of site s among the sender columns of `singles`.
        let col = |s: usize| senders.iter().position(|&m| m == s).expect("sender site");

        let mut pairs = vec![[ZERO; 4]; n];
        match route {
            Route::FreeFermion => {
                for (k, row) in pairs.iter_mut().enumerate().filter(|(k, _)| *k != r) {
                    let (i, j) = if k < r { (k, r) } else { (r, k) };
                    for (p, &(x, y)) in initial_pairs.iter().enumerate() {
                        let (gi, gj) = (&singles[i], &singles[j]);
                        row[p] = gi[col(x)] * gj[col(y)] - gi[col(y)] * gj[col(x)];
                    }
                }
            }
            Route::Dense => {
                let two = prop.require_two()?;
                let basis = Basis::new(n)?;
                let phases2 = two.phases(t);
                let v = &two.vectors;
                let weighted: Vec<Vec<Complex64>> = initial_pairs
                    .iter()
                    .map(|&(x, y)| {
                        let c = basis.pair0(x, y);
                        phases2.iter().enumerate().map(|(m, p)| p * v[(c, m)]).collect()
                    })
                    .collect();
                for (k, row) in pairs.iter_mut().enumerate().filter(|(k, _)| *k != r) {
                    let to = basis.pair0_unordered(k, r);
                    for (p, w) in weighted.iter().enumerate() {
                        row[p] = w.iter().enumerate().map(|(m, wm)| wm * v[(to, m)]).sum();
                    }
                }
            }
        }
        Ok(Self { n_sites: n, receiver: r, t, singles, pairs })
    }

    /// Builds the propagator and the map in one go, using the fermionic route.
    pub fn for_layout(layout: &CouplingLayout, t: f64) -> Result<Self> {
        let prop = BlockPropagator::for_layout(layout, crate::evolution::Sectors::OneOnly)?;
        Self::new(layout, &prop, t, Route::FreeFermion)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Receiver site, 1-based.
    pub fn receiver(&self) -> usize {
        self.receiver + 1
    }

    /// Reduced receiver state for an already validated spec.
    pub fn density_unchecked(&self, spec: &InitialStateSpec) -> Density2 {
        let [a10, a11, a12] = spec.sender1.amplitudes();
        let [a20, a21, a22] = spec.sender2.amplitudes();
        let vac = a10 * a20;
        let ws = [a11 * a20, a12 * a20, a10 * a21, a10 * a22];
        let wp = [a11 * a21, a11 * a22, a12 * a21, a12 * a22];
        let dot = |row: &[Complex64; 4], w: &[Complex64; 4]| -> Complex64 {
            row.iter().zip(w).map(|(a, b)| a * b).sum()
        };
        let cr = dot(&self.singles[self.receiver], &ws);
        let mut rho11 = cr.norm_sqr();
        let mut rho01 = vac * cr.conj();
        for k in (0..self.n_sites).filter(|&k| k != self.receiver) {
            let ck = dot(&self.singles[k], &ws);
            let dk = dot(&self.pairs[k], &wp);
            rho11 += dk.norm_sqr();
            rho01 += ck * dk.conj();
        }
        Density2::from_parts(1.0 - rho11, rho11, rho01)
    }

    pub fn density(&self, spec: &InitialStateSpec) -> Result<Density2> {
        spec.validate()?;
        Ok(self.density_unchecked(spec))
    }

    pub fn state(&self, spec: &InitialStateSpec, policy: BranchPolicy) -> Result<ReceiverState> {
        decompose_receiver(&self.density(spec)?, policy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{evolve, Sectors};
    use crate::receiver::{assemble_initial, reduce_to_receiver};

    #[test]
    fn routes_agree_with_full_evolution() {
        let layout = CouplingLayout::asymmetric(6, 0.55, 0.8, 0.3).unwrap();
        let basis = Basis::new(12).unwrap();
        let prop = BlockPropagator::for_layout(&layout, Sectors::Both).unwrap();
        let t = 7.3;
        let fast = ReceiverMap::new(&layout, &prop, t, Route::FreeFermion).unwrap();
        let dense = ReceiverMap::new(&layout, &prop, t, Route::Dense).unwrap();
        let spec = InitialStateSpec::is11((0.3, 0.7), (0.45, 0.2)).unwrap();
        let psi = evolve(&prop, &assemble_initial(&spec, &layout, &basis).unwrap(), t).unwrap();
        let reference = reduce_to_receiver(&psi, layout.receiver(), &basis).unwrap();
        assert!(fast.density(&spec).unwrap().max_abs_diff(&reference) < 1e-12);
        assert!(dense.density(&spec).unwrap().max_abs_diff(&reference) < 1e-12);
    }

    #[test]
    fn mismatched_propagator_rejected() {
        let a = CouplingLayout::minimal5(0.7).unwrap();
        let b = CouplingLayout::minimal5(0.8).unwrap();
        let prop = BlockPropagator::for_layout(&a, Sectors::OneOnly).unwrap();
        assert!(ReceiverMap::new(&b, &prop, 1.0, Route::FreeFermion).is_err());
        assert!(ReceiverMap::new(&a, &prop, 1.0, Route::Dense).is_err());
        let single = CouplingLayout::single_channel(8, 0.5, 0.8).unwrap();
        assert!(ReceiverMap::for_layout(&single, 1.0).is_err());
    }
}
