//! The two mixed-state gates.
//!
//! Gate 1 fixes the eigenvalue shared by the one-sender and two-sender
//! scenarios and solves for the sender angles; gate 2 exchanges eigenvalue
//! and eigenvector parameters between those scenarios. All phases are zero
//! and receiver states use [`BranchPolicy::LargerFirst`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ReceiverMap;
use crate::error::{Error, Result};
use crate::receiver::{BranchPolicy, InitialStateSpec, ReceiverState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub fd_step: f64,
    pub max_iter: usize,
    /// Convergence threshold on the largest residual component.
    pub tol: f64,
    /// Random restarts after the deterministic start fails.
    pub restarts: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { fd_step: 1e-6, max_iter: 40, tol: 1e-10, restarts: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOutcome {
    pub x: [f64; 2],
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn inf_norm(r: [f64; 2]) -> f64 {
    r[0].abs().max(r[1].abs())
}

/// Central difference, one-sided where the stencil leaves `[0, 1]`.
fn stencil(x: f64, h: f64) -> (f64, f64) {
    if x - h < 0.0 {
        (x, x + h)
    } else if x + h > 1.0 {
        (x - h, x)
    } else {
        (x - h, x + h)
    }
}

/// Damped Newton on `[0, 1]^2`. Trial points are clipped into the box and
/// accepted only if they reduce the residual.
pub fn newton2<F>(f: F, x0: [f64; 2], opts: &NewtonOptions) -> NewtonOutcome
where
    F: Fn([f64; 2]) -> Option<[f64; 2]>,
{
    let mut x = [x0[0].clamp(0.0, 1.0), x0[1].clamp(0.0, 1.0)];
    let Some(mut r) = f(x) else {
        return NewtonOutcome { x, residual: f64::INFINITY, iterations: 0, converged: false };
    };
    let mut norm = inf_norm(r);
    for it in 0..opts.max_iter {
        if norm < opts.tol {
            return NewtonOutcome { x, residual: norm, iterations: it, converged: true };
        }
        let mut jac = [[0.0; 2]; 2];
        for c in 0..2 {
            let (lo, hi) = stencil(x[c], opts.fd_step);
            let (mut xl, mut xh) = (x, x);
            xl[c] = lo;
            xh[c] = hi;
            let (Some(fl), Some(fh)) = (f(xl), f(xh)) else {
                return NewtonOutcome { x, residual: norm, iterations: it, converged: false };
            };
            for row in 0..2 {
                jac[row][c] = (fh[row] - fl[row]) / (hi - lo);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !det.is_finite() || det.abs() < 1e-300 {
            break;
        }
        let step = [
            -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = [(x[0] + damping * step[0]).clamp(0.0, 1.0), (x[1] + damping * step[1]).clamp(0.0, 1.0)];
            if let Some(rt) = f(trial) {
                let nt = inf_norm(rt);
                if nt < norm {
                    x = trial;
                    r = rt;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            damping *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    NewtonOutcome { x, residual: norm, iterations: opts.max_iter, converged: norm < opts.tol }
}

/// Scalar Newton on `[0, 1]` with the same damping rule.
fn newton1<F: Fn(f64) -> Option<f64>>(f: F, x0: f64, opts: &NewtonOptions) -> Option<(f64, f64)> {
    let mut x = x0.clamp(0.0, 1.0);
    let mut r = f(x)?;
    for _ in 0..opts.max_iter {
        if r.abs() < opts.tol {
            return Some((x, r.abs()));
        }
        let (lo, hi) = stencil(x, opts.fd_step);
        let d = (f(hi)? - f(lo)?) / (hi - lo);
        if !d.is_finite() || d == 0.0 {
            return None;
        }
        let step = -r / d;
        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = (x + damping * step).clamp(0.0, 1.0);
            if let Some(rt) = f(trial) {
                if rt.abs() < r.abs() {
                    x = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            damping *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (r.abs() < opts.tol).then_some((x, r.abs()))
}

/// Solved gate tuple. `residual` is the largest equation violation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    /// `(alpha11, alpha12, alpha21, alpha22)`.
    pub angles: [f64; 4],
    /// `(lambda10, beta10, lambda11, beta11)`.
    pub outputs: [f64; 4],
    pub residual: f64,
}

impl GateRecord {
    pub const CSV_HEADER: &'static str =
        "alpha11,alpha12,alpha21,alpha22,lambda10,beta10,lambda11,beta11,residual";

    pub fn lambda10(&self) -> f64 {
        self.outputs[0]
    }

    pub fn beta10(&self) -> f64 {
        self.outputs[1]
    }

    pub fn lambda11(&self) -> f64 {
        self.outputs[2]
    }

    pub fn beta11(&self) -> f64 {
        self.outputs[3]
    }
}

fn state(map: &ReceiverMap, spec: InitialStateSpec) -> Result<ReceiverState> {
    map.state(&spec, BranchPolicy::LargerFirst)
}

/// `(lambda10, beta10, lambda11, beta11)` for the given sender angles.
pub fn gate_outputs(map: &ReceiverMap, angles: [f64; 4]) -> Result<[f64; 4]> {
    let [a11, a12, a21, a22] = angles;
    let s10 = state(map, InitialStateSpec::is10(a11, a12, 0.0)?)?;
    let s11 = state(map, InitialStateSpec::is11((a11, a12), (a21, a22))?)?;
    Ok([s10.lambda, s10.beta1, s11.lambda, s11.beta1])
}

/// Gate-1 system residual: `(lambda10 - target, lambda11 - target)` with
/// both senders sharing the angles.
pub fn gate1_residual(map: &ReceiverMap, alpha11: f64, alpha12: f64, lambda_target: f64) -> Result<[f64; 2]> {
    let o = gate_outputs(map, [alpha11, alpha12, alpha11, alpha12])?;
    Ok([o[0] - lambda_target, o[2] - lambda_target])
}

fn gate1_record(map: &ReceiverMap, x: [f64; 2], lambda_target: f64) -> Result<GateRecord> {
    let angles = [x[0], x[1], x[0], x[1]];
    let outputs = gate_outputs(map, angles)?;
    let residual = (outputs[0] - lambda_target).abs().max((outputs[2] - lambda_target).abs());
    Ok(GateRecord { angles, outputs, residual })
}

/// Below this residual a gate record counts as a solution.
pub const ACCEPT: f64 = 1e-8;

const SEED_GRID: usize = 9;

fn seed_grid() -> impl Iterator<Item = [f64; 2]> {
    (0..SEED_GRID).flat_map(|i| {
        (0..SEED_GRID).map(move |j| [(i as f64 + 0.5) / SEED_GRID as f64, (j as f64 + 0.5) / SEED_GRID as f64])
    })
}

fn best_seed<F: Fn([f64; 2]) -> Option<[f64; 2]>>(f: &F) -> Option<[f64; 2]> {
    seed_grid()
        .filter_map(|x| f(x).map(|r| (x, inf_norm(r))))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|p| p.0)
}

fn solve_multistart<F>(f: &F, warm: Option<[f64; 2]>, opts: &NewtonOptions, rng: &mut ChaCha8Rng) -> Option<NewtonOutcome>
where
    F: Fn([f64; 2]) -> Option<[f64; 2]>,
{
    for start in warm.into_iter().chain(best_seed(f)) {
        let out = newton2(f, start, opts);
        if out.converged {
            return Some(out);
        }
    }
    for _ in 0..opts.restarts {
        let out = newton2(f, [rng.random(), rng.random()], opts);
        if out.converged {
            return Some(out);
        }
    }
    None
}

/// Sender angles putting both scenario eigenvalues at `lambda_target`.
pub fn gate1_solve(map: &ReceiverMap, lambda_target: f64, opts: &NewtonOptions, seed: u64) -> Result<GateRecord> {
    gate1_solve_from(map, lambda_target, None, opts, seed)
}

fn gate1_solve_from(
    map: &ReceiverMap,
    lambda_target: f64,
    warm: Option<[f64; 2]>,
    opts: &NewtonOptions,
    seed: u64,
) -> Result<GateRecord> {
    if !(0.5..1.0).contains(&lambda_target) {
        return Err(Error::Domain { name: "lambda", value: lambda_target });
    }
    let f = |x: [f64; 2]| gate1_residual(map, x[0], x[1], lambda_target).ok();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = solve_multistart(&f, warm, opts, &mut rng)
        .ok_or_else(|| Error::Infeasible(format!("gate 1 has no solution at lambda = {lambda_target}")))?;
    let rec = gate1_record(map, out.x, lambda_target)?;
    if rec.residual >= ACCEPT {
        return Err(Error::Infeasible(format!("gate 1 residual {:.3e} at lambda = {lambda_target}", rec.residual)));
    }
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Option<Self> {
        values.fold(None, |acc, v| match acc {
            None => Some(Self { min: v, max: v }),
            Some(r) => Some(Self { min: r.min.min(v), max: r.max.max(v) }),
        })
    }
}

/// Parameter ranges over the feasible part of a gate-1 curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate1Summary {
    pub lambda: Range,
    pub beta10: Range,
    pub beta11: Range,
    pub alpha11: Range,
    pub alpha12: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate1Trace {
    pub lambdas: Vec<f64>,
    /// One entry per grid value; `None` marks an infeasible cell.
    pub curve: Vec<Option<GateRecord>>,
    /// Half-open index range of the longest feasible run.
    pub run: Option<(usize, usize)>,
    /// Solutions on the box boundary that close the run, when found.
    pub lower_end: Option<GateRecord>,
    pub upper_end: Option<GateRecord>,
    pub summary: Option<Gate1Summary>,
}

impl Gate1Trace {
    /// Curve records of the feasible run, with the boundary solutions.
    pub fn feasible(&self) -> Vec<GateRecord> {
        let Some((a, b)) = self.run else { return Vec::new() };
        self.lower_end
            .into_iter()
            .chain(self.curve[a..b].iter().flatten().copied())
            .chain(self.upper_end)
            .collect()
    }
}

/// Pins the angle nearest a face of the box and solves `lambda10 = lambda11`
/// for the other one, closing the curve on the boundary.
fn close_on_boundary(map: &ReceiverMap, rec: &GateRecord, opts: &NewtonOptions) -> Option<GateRecord> {
    let x = [rec.angles[0], rec.angles[1]];
    let (coord, face) = [(0, 0.0), (0, 1.0), (1, 0.0), (1, 1.0)]
        .into_iter()
        .min_by(|a, b| (x[a.0] - a.1).abs().total_cmp(&(x[b.0] - b.1).abs()))?;
    let free = 1 - coord;
    let at = |v: f64| {
        let mut y = [0.0; 2];
        y[coord] = face;
        y[free] = v;
        y
    };
    let g = |v: f64| {
        let y = at(v);
        gate_outputs(map, [y[0], y[1], y[0], y[1]]).ok().map(|o| o[0] - o[2])
    };
    let (v, _) = newton1(g, x[free], opts)?;
    let y = at(v);
    let outputs = gate_outputs(map, [y[0], y[1], y[0], y[1]]).ok()?;
    Some(GateRecord { angles: [y[0], y[1], y[0], y[1]], outputs, residual: (outputs[0] - outputs[2]).abs() })
}

/// Continuation of gate 1 along an increasing `lambda` grid.
pub fn gate1_trace(map: &ReceiverMap, lambdas: &[f64], opts: &NewtonOptions, seed: u64) -> Result<Gate1Trace> {
    if let Some(&bad) = lambdas.iter().find(|l| !(0.5..1.0).contains(*l)) {
        return Err(Error::Domain { name: "lambda", value: bad });
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Grid("gate-1 lambda grid must be strictly increasing".into()));
    }
    let mut curve = Vec::with_capacity(lambdas.len());
    let mut warm = None;
    for (k, &l) in lambdas.iter().enumerate() {
        let rec = gate1_solve_from(map, l, warm, opts, seed.wrapping_add(k as u64)).ok();
        warm = rec.map(|r| [r.angles[0], r.angles[1]]);
        curve.push(rec);
    }

    let mut run: Option<(usize, usize)> = None;
    let mut k = 0;
    while k < curve.len() {
        if curve[k].is_some() {
            let start = k;
            while k < curve.len() && curve[k].is_some() {
                k += 1;
            }
            if run.is_none_or(|(a, b)| k - start > b - a) {
                run = Some((start, k));
            }
        } else {
            k += 1;
        }
    }

    let (mut lower_end, mut upper_end) = (None, None);
    if let Some((a, b)) = run {
        let first = curve[a].expect("run starts on a solution");
        let last = curve[b - 1].expect("run ends on a solution");
        lower_end = close_on_boundary(map, &first, opts).filter(|e| e.residual < ACCEPT && e.lambda10() <= first.lambda10());
        upper_end = close_on_boundary(map, &last, opts).filter(|e| e.residual < ACCEPT && e.lambda10() >= last.lambda10());
    }
    let mut trace = Gate1Trace { lambdas: lambdas.to_vec(), curve, run, lower_end, upper_end, summary: None };
    let pts = trace.feasible();
    trace.summary = (!pts.is_empty()).then(|| {
        let r = |f: fn(&GateRecord) -> f64| Range::of(pts.iter().map(f)).expect("nonempty");
        Gate1Summary {
            lambda: r(|g| g.lambda10()),
            beta10: r(|g| g.beta10()),
            beta11: r(|g| g.beta11()),
            alpha11: r(|g| g.angles[0]),
            alpha12: r(|g| g.angles[1]),
        }
    });
    Ok(trace)
}

/// `(beta11 - lambda10, lambda11 - (1 - beta10))`.
pub fn gate2_residual(map: &ReceiverMap, angles: [f64; 4]) -> Result<[f64; 2]> {
    let [l10, b10, l11, b11] = gate_outputs(map, angles)?;
    Ok([b11 - l10, l11 - (1.0 - b10)])
}

fn gate2_record(map: &ReceiverMap, angles: [f64; 4]) -> Result<GateRecord> {
    let outputs = gate_outputs(map, angles)?;
    let [l10, b10, l11, b11] = outputs;
    Ok(GateRecord { angles, outputs, residual: (b11 - l10).abs().max((l11 - (1.0 - b10)).abs()) })
}

/// Control angles `(alpha21, alpha22)` solving gate 2 for a fixed input
/// sender, or `None` if Newton fails from `init`.
pub fn gate2_solve(
    map: &ReceiverMap,
    alpha11: f64,
    alpha12: f64,
    init: [f64; 2],
    opts: &NewtonOptions,
) -> Result<Option<GateRecord>> {
    InitialStateSpec::is10(alpha11, alpha12, 0.0)?;
    let f = |x: [f64; 2]| gate2_residual(map, [alpha11, alpha12, x[0], x[1]]).ok();
    let out = newton2(f, init, opts);
    if !out.converged {
        return Ok(None);
    }
    let rec = gate2_record(map, [alpha11, alpha12, out.x[0], out.x[1]])?;
    Ok((rec.residual < ACCEPT).then_some(rec))
}

/// Random input senders with multistart Newton for each. Sample `k` draws
/// from stream `k` of the seed, so the output is independent of scheduling.
pub fn gate2_domain(map: &ReceiverMap, n_samples: usize, seed: u64, opts: &NewtonOptions) -> Vec<GateRecord> {
    (0..n_samples)
        .into_par_iter()
        .filter_map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let (a11, a12): (f64, f64) = (rng.random(), rng.random());
            (0..opts.restarts.max(1)).find_map(|_| {
                let init = [rng.random(), rng.random()];
                gate2_solve(map, a11, a12, init, opts).ok().flatten()
            })
        })
        .collect()
}

/// Widest empty interval of `values` inside `[lo, hi]`, as `(start, end)`.
pub fn widest_gap(values: impl IntoIterator<Item = f64>, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| (lo..=hi).contains(x)).collect();
    v.sort_by(f64::total_cmp);
    v.windows(2).map(|w| (w[0], w[1])).max_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::CouplingLayout;

    fn minimal5_map() -> ReceiverMap {
        ReceiverMap::for_layout(&CouplingLayout::minimal5(0.707).unwrap(), 4.443).unwrap()
    }

    #[test]
    fn newton_on_circle_line() {
        let f = |x: [f64; 2]| Some([x[0] * x[0] + x[1] * x[1] - 0.5, x[0] - x[1]]);
        let out = newton2(f, [0.9, 0.2], &NewtonOptions::default());
        assert!(out.converged);
        assert!((out.x[0] - 0.5).abs() < 1e-10 && (out.x[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn newton_reports_failure() {
        let f = |x: [f64; 2]| Some([x[0] * x[0] + 1.0, x[1]]);
        assert!(!newton2(f, [0.3, 0.3], &NewtonOptions::default()).converged);
    }

    #[test]
    fn gate2_ground_residual() {
        let map = minimal5_map();
        let r = gate2_residual(&map, [1.0, 0.3, 1.0, 0.7]).unwrap();
        assert!((r[0] + 1.0).abs() < 1e-14 && r[1].abs() < 1e-14);
        assert!(gate2_residual(&map, [1.2, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn gate1_at_point_eight() {
        let map = minimal5_map();
        let rec = gate1_solve(&map, 0.8, &NewtonOptions::default(), 0).unwrap();
        assert!((rec.lambda10() - 0.8).abs() < 1e-6 && (rec.lambda11() - 0.8).abs() < 1e-6);
        assert!(rec.beta10() > 0.0 && rec.beta10() < 0.304033 + 0.01);
        assert!(rec.residual < ACCEPT);
    }

    #[test]
    fn gate1_below_interval_is_infeasible() {
        let map = minimal5_map();
        assert!(matches!(gate1_solve(&map, 0.5, &NewtonOptions::default(), 0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn gate2_fixed_point() {
        let map = minimal5_map();
        let recs = gate2_domain(&map, 40, 3, &NewtonOptions::default());
        assert!(!recs.is_empty());
        for r in &recs {
            let f = |x: [f64; 2]| gate2_residual(&map, [r.angles[0], r.angles[1], x[0], x[1]]).ok();
            let out = newton2(f, [r.angles[2], r.angles[3]], &NewtonOptions::default());
            assert!(out.converged && out.iterations <= 2, "{out:?}");
        }
    }

    #[test]
    fn gap_finder() {
        let g = widest_gap([0.1, 0.2, 0.5, 0.55, 0.9], 0.0, 1.0).unwrap();
        assert_eq!(g, (0.55, 0.9));
        assert!(widest_gap([0.3], 0.0, 1.0).is_none());
    }
}
