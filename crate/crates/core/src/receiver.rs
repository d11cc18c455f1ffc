//! Sender initial states and the receiver's one-qubit density matrix.
//!
//! A sender is a two-qubit block prepared in
//! `a0 |0> + a1 |s_a> + a2 |s_b>` with
//!
//! ```text
//! a0 = sin(pi a_1 / 2)
//! a1 = cos(pi a_1 / 2) cos(pi a_2 / 2) exp(2 pi i phi_1)
//! a2 = cos(pi a_1 / 2) sin(pi a_2 / 2) exp(2 pi i phi_2)
//! ```
//!
//! The receiver state is written as `rho = U diag(lambda, 1 - lambda) U^+`
//! with
//!
//! ```text
//! U = [ cos(pi b1 / 2)                    -exp(-2 pi i b2) sin(pi b1 / 2) ]
//!     [ exp(2 pi i b2) sin(pi b1 / 2)      cos(pi b1 / 2)                 ]
//! ```
//!
//! Every density matrix has two such representations, exchanged by
//! [`swap_branch`]; a [`BranchPolicy`] picks one.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::evolution::StateVector;
use crate::layout::CouplingLayout;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Angle parameters of one sender, all in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SenderAngles {
    pub alpha1: f64,
    pub alpha2: f64,
    pub phi1: f64,
    pub phi2: f64,
}

impl SenderAngles {
    pub fn new(alpha1: f64, alpha2: f64, phi1: f64, phi2: f64) -> Result<Self> {
        let a = Self { alpha1, alpha2, phi1, phi2 };
        a.validate()?;
        Ok(a)
    }

    /// Real amplitudes (`phi = 0`).
    pub fn real(alpha1: f64, alpha2: f64) -> Result<Self> {
        Self::new(alpha1, alpha2, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("phi1", self.phi1),
            ("phi2", self.phi2),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::Domain { name, value });
            }
        }
        Ok(())
    }

    /// `(a0, a1, a2)`.
    pub fn amplitudes(&self) -> [Complex64; 3] {
        let (s1, c1) = quarter_turn(self.alpha1);
        let (s2, c2) = quarter_turn(self.alpha2);
        [
            Complex64::new(s1, 0.0),
            Complex64::from_polar(c1 * c2, TAU * self.phi1),
            Complex64::from_polar(c1 * s2, TAU * self.phi2),
        ]
    }
}

/// `(sin, cos)` of `alpha pi / 2`, exact at both ends of `[0, 1]`.
fn quarter_turn(alpha: f64) -> (f64, f64) {
    ((alpha * FRAC_PI_2).sin(), ((1.0 - alpha) * FRAC_PI_2).sin())
}

pub fn sender_amplitudes(angles: &SenderAngles) -> Result<[Complex64; 3]> {
    angles.validate()?;
    Ok(angles.amplitudes())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SenderInput {
    Ground,
    Angles(SenderAngles),
}

impl SenderInput {
    pub fn amplitudes(&self) -> [Complex64; 3] {
        match self {
            Self::Ground => [Complex64::new(1.0, 0.0), ZERO, ZERO],
            Self::Angles(a) => a.amplitudes(),
        }
    }

    /// `(alpha1, alpha2, phi1, phi2)`; the ground state is `alpha1 = 1`.
    pub fn angles(&self) -> [f64; 4] {
        match self {
            Self::Ground => [1.0, 0.0, 0.0, 0.0],
            Self::Angles(a) => [a.alpha1, a.alpha2, a.phi1, a.phi2],
        }
    }
}

/// Initial-state families used in the region and gate analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// Sender 1 active with `phi11 = 0`, sender 2 in the ground state.
    IS10,
    /// Sender 2 active with real amplitudes, sender 1 in the ground state.
    IS01,
    /// Both senders active.
    IS11,
    /// Real sender 1 input, sender 2 fixed at `|N>`.
    IS1,
    /// Sender 1 fixed at `(|0> + |1>)/sqrt 2`, real sender 2 input.
    IS2,
    /// Both senders in the same real state.
    IS3,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::IS10 => "IS10",
            Self::IS01 => "IS01",
            Self::IS11 => "IS11",
            Self::IS1 => "IS1",
            Self::IS2 => "IS2",
            Self::IS3 => "IS3",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "IS10" => Self::IS10,
            "IS01" => Self::IS01,
            "IS11" => Self::IS11,
            "IS1" => Self::IS1,
            "IS2" => Self::IS2,
            "IS3" => Self::IS3,
            _ => return Err(Error::Grid(format!("unknown scenario '{s}'"))),
        })
    }
}

/// Product initial state of the two senders; the rest of the line starts empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialStateSpec {
    pub sender1: SenderInput,
    pub sender2: SenderInput,
    pub scenario: Option<Scenario>,
}

impl InitialStateSpec {
    pub fn new(sender1: SenderInput, sender2: SenderInput) -> Self {
        Self { sender1, sender2, scenario: None }
    }

    pub fn is10(alpha11: f64, alpha12: f64, phi12: f64) -> Result<Self> {
        Ok(Self {
            sender1: SenderInput::Angles(SenderAngles::new(alpha11, alpha12, 0.0, phi12)?),
            sender2: SenderInput::Ground,
            scenario: Some(Scenario::IS10),
        })
    }

    pub fn is01(alpha21: f64, alpha22: f64) -> Result<Self> {
        Ok(Self {
            sender1: SenderInput::Ground,
            sender2: SenderInput::Angles(SenderAngles::real(alpha21, alpha22)?),
            scenario: Some(Scenario::IS01),
        })
    }

    /// Both senders active with real amplitudes.
    pub fn is11(sender1: (f64, f64), sender2: (f64, f64)) -> Result<Self> {
        Ok(Self {
            sender1: SenderInput::Angles(SenderAngles::real(sender1.0, sender1.1)?),
            sender2: SenderInput::Angles(SenderAngles::real(sender2.0, sender2.1)?),
            scenario: Some(Scenario::IS11),
        })
    }

    pub fn is1(alpha11: f64, alpha12: f64) -> Result<Self> {
        Ok(Self {
            sender1: SenderInput::Angles(SenderAngles::real(alpha11, alpha12)?),
            sender2: SenderInput::Angles(SenderAngles::real(0.0, 0.0)?),
            scenario: Some(Scenario::IS1),
        })
    }

    pub fn is2(alpha21: f64, alpha22: f64) -> Result<Self> {
        Ok(Self {
            sender1: SenderInput::Angles(SenderAngles::real(0.5, 0.0)?),
            sender2: SenderInput::Angles(SenderAngles::real(alpha21, alpha22)?),
            scenario: Some(Scenario::IS2),
        })
    }

    pub fn is3(alpha1: f64, alpha2: f64) -> Result<Self> {
        let s = SenderInput::Angles(SenderAngles::real(alpha1, alpha2)?);
        Ok(Self { sender1: s, sender2: s, scenario: Some(Scenario::IS3) })
    }

    /// Checks angle ranges and the constraints implied by the scenario tag.
    pub fn validate(&self) -> Result<()> {
        for s in [self.sender1, self.sender2] {
            if let SenderInput::Angles(a) = s {
                a.validate()?;
            }
        }
        let bad = |what: &str| {
            Err(Error::Grid(format!("{what} violates scenario {:?}", self.scenario)))
        };
        let s1 = self.sender1.angles();
        let s2 = self.sender2.angles();
        let is_ground = |s: &SenderInput| s.amplitudes()[0] == Complex64::new(1.0, 0.0);
        match self.scenario {
            None => Ok(()),
            Some(Scenario::IS10) if !is_ground(&self.sender2) || s1[2] != 0.0 => bad("sender state"),
            Some(Scenario::IS01) if !is_ground(&self.sender1) || s2[2] != 0.0 || s2[3] != 0.0 => {
                bad("sender state")
            }
            Some(Scenario::IS1) if s2 != [0.0; 4] || s1[2] != 0.0 || s1[3] != 0.0 => bad("sender state"),
            Some(Scenario::IS2) if s1 != [0.5, 0.0, 0.0, 0.0] || s2[2] != 0.0 || s2[3] != 0.0 => {
                bad("sender state")
            }
            Some(Scenario::IS3) if s1 != s2 || s1[2] != 0.0 || s1[3] != 0.0 => bad("sender state"),
            Some(Scenario::IS11) if s1[2..] != [0.0, 0.0] || s2[2..] != [0.0, 0.0] => bad("phases"),
            _ => Ok(()),
        }
    }

    /// `alpha11, alpha12, alpha21, alpha22, phi11, phi12, phi21, phi22`.
    pub fn angle_row(&self) -> [f64; 8] {
        let a = self.sender1.angles();
        let b = self.sender2.angles();
        [a[0], a[1], b[0], b[1], a[2], a[3], b[2], b[3]]
    }
}

/// Expand the product state into the (at most nine) excitation amplitudes.
pub fn assemble_initial(
    spec: &InitialStateSpec,
    layout: &CouplingLayout,
    basis: &Basis,
) -> Result<StateVector> {
    spec.validate()?;
    if basis.n_sites() != layout.n_sites() {
        return Err(Error::Dimension("basis and layout sizes differ".into()));
    }
    let (s1a, s1b) = layout.sender1();
    let (s2a, s2b) = layout
        .sender2()
        .ok_or_else(|| Error::Topology("layout has no second sender".into()))?;
    let r = layout.receiver();
    if [s1a, s1b, s2a, s2b].contains(&r) {
        return Err(Error::Topology(format!("sender sites overlap the receiver site {r}")));
    }
    let [a10, a11, a12] = spec.sender1.amplitudes();
    let [a20, a21, a22] = spec.sender2.amplitudes();
    let mut psi = StateVector::zeros(basis);
    psi.vacuum = a10 * a20;
    psi.singles[s1a - 1] += a11 * a20;
    psi.singles[s1b - 1] += a12 * a20;
    psi.singles[s2a - 1] += a10 * a21;
    psi.singles[s2b - 1] += a10 * a22;
    for (x, y, w) in [(s1a, s2a, a11 * a21), (s1a, s2b, a11 * a22), (s1b, s2a, a12 * a21), (s1b, s2b, a12 * a22)]
    {
        psi.pairs[basis.pair0_unordered(x - 1, y - 1)] += w;
    }
    Ok(psi)
}

/// A 2x2 density matrix in the receiver basis `(|0>, |1>)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Density2(pub [[Complex64; 2]; 2]);

impl Density2 {
    /// Built from the populations and coherence `rho_01 = <0|rho|1>`.
    pub fn from_parts(rho00: f64, rho11: f64, rho01: Complex64) -> Self {
        Self([[Complex64::new(rho00, 0.0), rho01], [rho01.conj(), Complex64::new(rho11, 0.0)]])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn hermiticity_error(&self) -> f64 {
        let m = &self.0;
        [(m[0][0] - m[0][0].conj()).norm(), (m[1][1] - m[1][1].conj()).norm(), (m[0][1] - m[1][0].conj()).norm()]
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// Bloch vector `(x, y, z)` with `rho = (1 + r . sigma) / 2`.
    pub fn bloch(&self) -> [f64; 3] {
        let b = self.0[0][1];
        [2.0 * b.re, -2.0 * b.im, (self.0[0][0] - self.0[1][1]).re]
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let [x, y, z] = self.bloch();
        let r = (x * x + y * y + z * z).sqrt();
        let half_trace = 0.5 * self.trace().re;
        [half_trace - 0.5 * r, half_trace + 0.5 * r]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut e = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                e = e.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        e
    }
}

/// Reduced density matrix of the receiver spin `r` (1-based).
pub fn reduce_to_receiver(psi: &StateVector, receiver: usize, basis: &Basis) -> Result<Density2> {
    basis.check_site(receiver)?;
    let norm = psi.norm_sqr();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::Normalization(norm));
    }
    let r = receiver - 1;
    let cr = psi.singles[r];
    let mut rho11 = cr.norm_sqr();
    let mut rho01 = psi.vacuum * cr.conj();
    for k in (0..basis.n_sites()).filter(|&k| k != r) {
        let ckr = psi.pairs[basis.pair0_unordered(k, r)];
        rho11 += ckr.norm_sqr();
        rho01 += psi.singles[k] * ckr.conj();
    }
    Ok(Density2::from_parts(norm - rho11, rho11, rho01))
}

/// Which of the two eigen-representations is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BranchPolicy {
    /// `lambda` is the larger eigenvalue; at `lambda = 1/2`, `beta1 <= 1/2`.
    #[default]
    LargerFirst,
    /// The first column of `U` is the eigenvector with the larger ground-state overlap.
    GroundAnchored,
    /// The first column of `U` is the eigenvector with the larger excited-state overlap.
    ExcitedAnchored,
}

impl BranchPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::LargerFirst => "larger",
            Self::GroundAnchored => "ground",
            Self::ExcitedAnchored => "excited",
        }
    }
}

impl fmt::Display for BranchPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BranchPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "larger" => Ok(Self::LargerFirst),
            "ground" => Ok(Self::GroundAnchored),
            "excited" => Ok(Self::ExcitedAnchored),
            _ => Err(Error::Grid(format!("unknown branch policy '{s}' (larger|ground|excited)"))),
        }
    }
}

/// `(lambda, beta1, beta2)` together with the matrix it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverState {
    pub rho: Density2,
    pub lambda: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub policy: BranchPolicy,
}

/// The other valid parametrization of the same density matrix.
pub fn swap_branch(lambda: f64, beta1: f64, beta2: f64) -> (f64, f64, f64) {
    (1.0 - lambda, 1.0 - beta1, (beta2 + 0.5).rem_euclid(1.0))
}

/// `U diag(lambda, 1 - lambda) U^+`.
pub fn compose(lambda: f64, beta1: f64, beta2: f64) -> Density2 {
    let (s, c) = (0.5 * PI * beta1).sin_cos();
    let e = Complex64::from_polar(1.0, TAU * beta2);
    // u1 = (c, e s), u2 = (-e* s, c)
    let u1 = [Complex64::new(c, 0.0), e * s];
    let u2 = [-e.conj() * s, Complex64::new(c, 0.0)];
    let mut m = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = u1[i] * u1[j].conj() * lambda + u2[i] * u2[j].conj() * (1.0 - lambda);
        }
    }
    Density2(m)
}

/// Bloch components below this are treated as exactly on the pole/origin.
const DEGENERATE: f64 = 1e-14;

pub fn decompose_receiver(rho: &Density2, policy: BranchPolicy) -> Result<ReceiverState> {
    let herm = rho.hermiticity_error();
    let tr = rho.trace();
    if herm > 1e-6 || (tr - 1.0).norm() > 1e-6 {
        return Err(Error::InvalidDensity(format!(
            "hermiticity error {herm:.3e}, trace {:.12}{:+.3e}i",
            tr.re, tr.im
        )));
    }
    let [x, y, z] = rho.bloch();
    let transverse = x.hypot(y);
    let r = transverse.hypot(z);
    let (lambda, beta1, beta2) = if r < DEGENERATE {
        (0.5, 0.0, 0.0)
    } else {
        // Eigenvector of the larger eigenvalue points along the Bloch vector.
        let beta1 = transverse.atan2(z) / PI;
        let beta2 = if transverse < DEGENERATE { 0.0 } else { (y.atan2(x) / TAU).rem_euclid(1.0) };
        (0.5 * (1.0 + r), beta1, beta2)
    };
    let swap = match policy {
        BranchPolicy::LargerFirst => false,
        BranchPolicy::GroundAnchored => beta1 > 0.5,
        BranchPolicy::ExcitedAnchored => beta1 < 0.5 && r >= DEGENERATE,
    };
    let (lambda, beta1, mut beta2) = if swap { swap_branch(lambda, beta1, beta2) } else { (lambda, beta1, beta2) };
    if transverse < DEGENERATE || beta2 >= 1.0 {
        beta2 = 0.0;
    }
    Ok(ReceiverState { rho: *rho, lambda, beta1, beta2, policy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisIndex;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn amplitudes() {
        let a = sender_amplitudes(&SenderAngles::new(1.0, 0.3, 0.0, 0.0).unwrap()).unwrap();
        assert!((a[0] - c(1.0)).norm() < 1e-16 && a[1].norm() < 1e-16 && a[2].norm() < 1e-16);
        let a = SenderAngles::real(0.0, 0.0).unwrap().amplitudes();
        assert_eq!(a, [c(0.0), c(1.0), c(0.0)]);
        let a = SenderAngles::real(0.0, 0.5).unwrap().amplitudes();
        let h = 0.5f64.sqrt();
        assert!((a[1] - c(h)).norm() < 1e-15 && (a[2] - c(h)).norm() < 1e-15);
        assert!(matches!(SenderAngles::new(0.0, 1.2, 0.0, 0.0), Err(Error::Domain { name: "alpha2", .. })));
        assert!(SenderAngles::new(0.0, 0.0, -0.1, 0.0).is_err());
    }

    #[test]
    fn initial_states() {
        let l = CouplingLayout::minimal5(0.7).unwrap();
        let b = Basis::new(5).unwrap();
        let ground = InitialStateSpec::new(SenderInput::Ground, SenderInput::Ground);
        let psi = assemble_initial(&ground, &l, &b).unwrap();
        assert_eq!(psi.vacuum, c(1.0));
        assert_eq!(psi.norm_sqr(), 1.0);

        let psi = assemble_initial(&InitialStateSpec::is10(0.0, 0.0, 0.0).unwrap(), &l, &b).unwrap();
        assert!((psi.amplitude(&b, BasisIndex::Single(1)).unwrap() - c(1.0)).norm() < 1e-15);

        let psi = assemble_initial(&InitialStateSpec::is11((0.0, 0.0), (0.0, 0.0)).unwrap(), &l, &b).unwrap();
        assert!((psi.amplitude(&b, BasisIndex::Pair(1, 5)).unwrap() - c(1.0)).norm() < 1e-15);

        let spec = InitialStateSpec::is11((0.3, 0.6), (0.2, 0.9)).unwrap();
        let psi = assemble_initial(&spec, &l, &b).unwrap();
        let nonzero = std::iter::once(psi.vacuum)
            .chain(psi.singles.iter().copied())
            .chain(psi.pairs.iter().copied())
            .filter(|z| z.norm() > 0.0)
            .count();
        assert_eq!(nonzero, 9);
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scenario_constraints() {
        let mut spec = InitialStateSpec::is3(0.2, 0.4).unwrap();
        spec.validate().unwrap();
        spec.sender2 = SenderInput::Angles(SenderAngles::real(0.2, 0.5).unwrap());
        assert!(spec.validate().is_err());
        let mut spec = InitialStateSpec::is10(0.2, 0.4, 0.6).unwrap();
        spec.validate().unwrap();
        spec.sender2 = SenderInput::Angles(SenderAngles::real(0.2, 0.5).unwrap());
        assert!(spec.validate().is_err());
    }

    #[test]
    fn sender_overlapping_receiver_rejected() {
        let mut doc = CouplingLayout::minimal5(0.7).unwrap().to_document();
        doc.receiver = 2;
        let l = CouplingLayout::try_from(doc).unwrap();
        let b = Basis::new(5).unwrap();
        let spec = InitialStateSpec::is10(0.3, 0.3, 0.0).unwrap();
        assert!(matches!(assemble_initial(&spec, &l, &b), Err(Error::Topology(_))));
    }

    #[test]
    fn reduction_examples() {
        let b = Basis::new(5).unwrap();
        let r = 3;
        let psi = StateVector::basis_state(&b, BasisIndex::Single(r)).unwrap();
        let rho = reduce_to_receiver(&psi, r, &b).unwrap();
        assert!(rho.max_abs_diff(&Density2::from_parts(0.0, 1.0, c(0.0))) < 1e-15);

        let h = 0.5f64.sqrt();
        let plus = Density2::from_parts(0.5, 0.5, c(0.5));
        let psi = StateVector::superposition(&b, &[(BasisIndex::Vacuum, c(h)), (BasisIndex::Single(r), c(h))]).unwrap();
        assert!(reduce_to_receiver(&psi, r, &b).unwrap().max_abs_diff(&plus) < 1e-15);
        let psi = StateVector::superposition(&b, &[(BasisIndex::Single(5), c(h)), (BasisIndex::Pair(3, 5), c(h))]).unwrap();
        assert!(reduce_to_receiver(&psi, r, &b).unwrap().max_abs_diff(&plus) < 1e-15);

        let unnormalized = StateVector::superposition(&b, &[(BasisIndex::Vacuum, c(2.0))]).unwrap();
        assert!(matches!(reduce_to_receiver(&unnormalized, r, &b), Err(Error::Normalization(_))));
    }

    #[test]
    fn decomposition_examples() {
        let s = decompose_receiver(&Density2::from_parts(0.7, 0.3, c(0.0)), BranchPolicy::LargerFirst).unwrap();
        assert!((s.lambda - 0.7).abs() < 1e-15 && s.beta1 == 0.0 && s.beta2 == 0.0);

        let s = decompose_receiver(&Density2::from_parts(0.5, 0.5, c(0.5)), BranchPolicy::LargerFirst).unwrap();
        assert!((s.lambda - 1.0).abs() < 1e-15 && (s.beta1 - 0.5).abs() < 1e-15 && s.beta2 == 0.0);

        let excited = Density2::from_parts(0.0, 1.0, c(0.0));
        let s = decompose_receiver(&excited, BranchPolicy::LargerFirst).unwrap();
        assert_eq!((s.lambda, s.beta1, s.beta2), (1.0, 1.0, 0.0));
        let s = decompose_receiver(&excited, BranchPolicy::GroundAnchored).unwrap();
        assert_eq!((s.lambda, s.beta1, s.beta2), (0.0, 0.0, 0.0));
        let s = decompose_receiver(&excited, BranchPolicy::ExcitedAnchored).unwrap();
        assert_eq!((s.lambda, s.beta1, s.beta2), (1.0, 1.0, 0.0));

        let mixed = decompose_receiver(&Density2::from_parts(0.5, 0.5, c(0.0)), BranchPolicy::LargerFirst).unwrap();
        assert_eq!((mixed.lambda, mixed.beta1, mixed.beta2), (0.5, 0.0, 0.0));
    }

    #[test]
    fn invalid_densities() {
        let bad_trace = Density2::from_parts(0.7, 0.7, c(0.0));
        assert!(matches!(decompose_receiver(&bad_trace, BranchPolicy::LargerFirst), Err(Error::InvalidDensity(_))));
        let mut skew = Density2::from_parts(0.5, 0.5, c(0.1));
        skew.0[1][0] = c(0.3);
        assert!(decompose_receiver(&skew, BranchPolicy::LargerFirst).is_err());
    }

    #[test]
    fn swap_examples() {
        let (l, b1, b2) = swap_branch(0.7, 0.2, 0.1);
        assert!((l - 0.3).abs() < 1e-15 && (b1 - 0.8).abs() < 1e-15 && (b2 - 0.6).abs() < 1e-15);
        assert_eq!(swap_branch(0.5, 0.5, 0.0), (0.5, 0.5, 0.5));
        // Both branches describe the same matrix.
        let a = compose(0.7, 0.2, 0.1);
        let (l, b1, b2) = swap_branch(0.7, 0.2, 0.1);
        assert!(a.max_abs_diff(&compose(l, b1, b2)) < 1e-15);
    }

    proptest! {
        #[test]
        fn sender_norm(a1 in 0.0..=1.0f64, a2 in 0.0..=1.0f64, p1 in 0.0..=1.0f64, p2 in 0.0..=1.0f64) {
            let a = SenderAngles::new(a1, a2, p1, p2).unwrap().amplitudes();
            let n: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((n - 1.0).abs() < 1e-14);
        }

        #[test]
        fn swap_is_involution(l in 0.0..=1.0f64, b1 in 0.0..=1.0f64, b2 in 0.0..1.0f64) {
            let (x, y, z) = swap_branch(l, b1, b2);
            let (x, y, z) = swap_branch(x, y, z);
            prop_assert!((x - l).abs() < 1e-15 && (y - b1).abs() < 1e-15);
            let dz = (z - b2).abs();
            prop_assert!(dz < 1e-15 || (1.0 - dz) < 1e-15);
        }

        #[test]
        fn compose_decompose_roundtrip(l in 0.5001..=1.0f64, b1 in 0.001..0.999f64, b2 in 0.0..1.0f64) {
            let rho = compose(l, b1, b2);
            let s = decompose_receiver(&rho, BranchPolicy::LargerFirst).unwrap();
            prop_assert!((s.lambda - l).abs() < 1e-8);
            prop_assert!((s.beta1 - b1).abs() < 1e-8);
            let db2 = (s.beta2 - b2).abs();
            prop_assert!(db2 < 1e-8 || (1.0 - db2) < 1e-8);
            prop_assert!(compose(s.lambda, s.beta1, s.beta2).max_abs_diff(&rho) < 1e-8);
        }

        #[test]
        fn branch_identity(l in 0.0..=1.0f64, b1 in 0.0..=1.0f64, b2 in 0.0..1.0f64) {
            let rho = compose(l, b1, b2);
            let larger = decompose_receiver(&rho, BranchPolicy::LargerFirst).unwrap();
            for policy in [BranchPolicy::GroundAnchored, BranchPolicy::ExcitedAnchored] {
                let s = decompose_receiver(&rho, policy).unwrap();
                let same = (s.lambda, s.beta1) == (larger.lambda, larger.beta1);
                let (sl, sb1, _) = swap_branch(larger.lambda, larger.beta1, larger.beta2);
                let swapped = (s.lambda - sl).abs() < 1e-15 && (s.beta1 - sb1).abs() < 1e-15;
                prop_assert!(same || swapped);
                prop_assert!(compose(s.lambda, s.beta1, s.beta2).max_abs_diff(&rho) < 1e-8);
            }
        }
    }
}
