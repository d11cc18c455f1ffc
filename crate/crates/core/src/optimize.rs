//! Transfer-probability maximization and channel-parameter searches.
//!
//! One-dimensional maxima use a coarse scan followed by golden-section
//! refinement around the best sample; coupling searches over two parameters
//! use a bounded Nelder-Mead simplex seeded from a coarse grid.

use serde::{Deserialize, Serialize};

use crate::channel::ReceiverMap;
use crate::error::{Error, Result};
use crate::evolution::{BlockPropagator, Sectors};
use crate::layout::CouplingLayout;
use crate::receiver::{BranchPolicy, Scenario};
use crate::region::{overlap_metrics, sweep_raster, AngleGrid};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximum of a unimodal `f` on `[a, b]`. Returns `(x, f(x))`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // The bracket interior can beat the midpoint by rounding.
    [(c, fc), (d, fd)].into_iter().fold((x, fx), |best, p| if p.1 > best.1 { p } else { best })
}

/// Coarse scan over `samples` points of `[lo, hi]`, then golden-section
/// refinement between the neighbors of the best one.
pub fn scan_then_refine<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, samples: usize, tol: f64) -> (f64, f64) {
    let samples = samples.max(3);
    let h = (hi - lo) / (samples - 1) as f64;
    let (mut best_k, mut best) = (0usize, f64::NEG_INFINITY);
    for k in 0..samples {
        let v = f(lo + k as f64 * h);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let a = lo + best_k.saturating_sub(1) as f64 * h;
    let b = (lo + (best_k + 1) as f64 * h).min(hi);
    let (x, fx) = golden_section_max(&mut f, a, b, tol);
    if fx >= best {
        (x, fx)
    } else {
        (lo + best_k as f64 * h, best)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when the simplex spread in every coordinate falls below this.
    pub x_tol: f64,
    pub f_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_evals: 600, x_tol: 1e-7, f_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder-Mead minimization with every trial point clamped into the box.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: &[f64],
    bounds: &[(f64, f64)],
    opts: NelderMeadOptions,
) -> Minimum {
    let n = x0.len();
    let clamp = |x: &mut Vec<f64>| {
        for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
            *v = v.clamp(lo, hi);
        }
    };
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        f(x)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    clamp(&mut start);
    let f0 = eval(&start, &mut evals);
    simplex.push((start.clone(), f0));
    for i in 0..n {
        let mut x = start.clone();
        x[i] += step[i];
        if x[i] > bounds[i].1 {
            x[i] = start[i] - step[i];
        }
        clamp(&mut x);
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }

    let mut converged = false;
    while evals < opts.max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = (0..n)
            .map(|i| {
                let (lo, hi) = simplex.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p.0[i]), hi.max(p.0[i]))
                });
                hi - lo
            })
            .fold(0.0, f64::max);
        if spread < opts.x_tol && (simplex[n].1 - simplex[0].1).abs() < opts.f_tol.max(1e-300) {
            converged = true;
            break;
        }
        if spread < opts.x_tol * 1e-3 {
            converged = true;
            break;
        }
        let centroid: Vec<f64> =
            (0..n).map(|i| simplex[..n].iter().map(|p| p.0[i]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| {
            let mut x: Vec<f64> = (0..n).map(|i| centroid[i] + t * (simplex[n].0[i] - centroid[i])).collect();
            clamp(&mut x);
            x
        };
        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let x = along(-0.5);
                let v = eval(&x, &mut evals);
                (x, v)
            } else {
                let x = along(0.5);
                let v = eval(&x, &mut evals);
                (x, v)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    let mut x: Vec<f64> = (0..n).map(|i| best[i] + 0.5 * (p.0[i] - best[i])).collect();
                    clamp(&mut x);
                    p.1 = eval(&x, &mut evals);
                    p.0 = x;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, evaluations: evals, converged }
}

/// Peak of `|<to| exp(-iHt) |from>|^2` over a time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferPeak {
    pub p_star: f64,
    pub t_star: f64,
}

/// Default transfer window `[0.5 n1, 2.5 n1]`.
pub fn default_window(n1: usize) -> (f64, f64) {
    (0.5 * n1 as f64, 2.5 * n1 as f64)
}

/// Default scan density: 25 samples per unit time, at least 200.
pub fn default_samples(window: (f64, f64)) -> usize {
    ((25.0 * (window.1 - window.0)).ceil() as usize).max(200)
}

fn check_window(window: (f64, f64)) -> Result<()> {
    if !(window.0.is_finite() && window.1.is_finite() && window.0 >= 0.0 && window.0 < window.1) {
        return Err(Error::EmptyWindow { lo: window.0, hi: window.1 });
    }
    Ok(())
}

pub fn max_transfer_prop(
    prop: &BlockPropagator,
    from: usize,
    to: usize,
    window: (f64, f64),
    samples: usize,
) -> Result<TransferPeak> {
    check_window(window)?;
    prop.transfer_probability(from, to, window.0)?;
    let (t_star, p_star) = scan_then_refine(
        |t| prop.transfer_probability(from, to, t).unwrap_or(f64::NEG_INFINITY),
        window.0,
        window.1,
        samples,
        1e-10,
    );
    Ok(TransferPeak { p_star, t_star })
}

pub fn max_transfer(
    layout: &CouplingLayout,
    from: usize,
    to: usize,
    window: (f64, f64),
    samples: usize,
) -> Result<TransferPeak> {
    let prop = BlockPropagator::for_layout(layout, Sectors::OneOnly)?;
    max_transfer_prop(&prop, from, to, window, samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferOptimum {
    pub deltas: Vec<f64>,
    pub t_star: f64,
    pub p_star: f64,
    pub evaluations: usize,
    /// False when the search stopped on its evaluation budget.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySearch {
    pub delta1: (f64, f64),
    pub delta2: (f64, f64),
    pub window: (f64, f64),
    pub samples: usize,
    /// Coarse grid points per axis used to seed the simplex.
    pub seed_grid: usize,
    pub simplex: NelderMeadOptions,
}

impl BoundarySearch {
    pub fn new(n1: usize) -> Self {
        let window = default_window(n1);
        Self {
            delta1: (0.05, 1.5),
            delta2: (0.05, 1.5),
            window,
            samples: default_samples(window),
            seed_grid: 15,
            simplex: NelderMeadOptions::default(),
        }
    }
}

/// `(delta1, delta2)` maximizing the end-to-end transfer of one channel.
pub fn optimize_boundary(n1: usize, search: &BoundarySearch) -> Result<TransferOptimum> {
    CouplingLayout::single_channel(n1, 1.0, 1.0)?;
    check_window(search.window)?;
    let peak = |d: &[f64]| -> Result<TransferPeak> {
        let layout = CouplingLayout::single_channel(n1, d[0], d[1])?;
        max_transfer(&layout, 1, n1, search.window, search.samples)
    };
    let objective = |d: &[f64]| peak(d).map(|p| -p.p_star).unwrap_or(f64::INFINITY);

    let g = search.seed_grid.max(2);
    let axis = |(lo, hi): (f64, f64), k: usize| lo + (hi - lo) * k as f64 / (g - 1) as f64;
    let mut best = (vec![1.0, 1.0], f64::INFINITY);
    for i in 0..g {
        for j in 0..g {
            let x = vec![axis(search.delta1, i), axis(search.delta2, j)];
            let v = objective(&x);
            if v < best.1 {
                best = (x, v);
            }
        }
    }
    let step = [
        (search.delta1.1 - search.delta1.0) / (g - 1) as f64,
        (search.delta2.1 - search.delta2.0) / (g - 1) as f64,
    ];
    let min = nelder_mead(objective, &best.0, &step, &[search.delta1, search.delta2], search.simplex);
    let p = peak(&min.x)?;
    Ok(TransferOptimum {
        deltas: min.x,
        t_star: p.t_star,
        p_star: p.p_star,
        evaluations: min.evaluations + g * g,
        converged: min.converged,
    })
}

/// The line whose central `delta3` bonds are tuned by [`optimize_link_symmetric`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LinkFamily {
    Minimal5,
    Symmetric { n1: usize, delta1: f64, delta2: f64 },
}

impl LinkFamily {
    pub fn layout(&self, delta3: f64) -> Result<CouplingLayout> {
        match *self {
            Self::Minimal5 => CouplingLayout::minimal5(delta3),
            Self::Symmetric { n1, delta1, delta2 } => CouplingLayout::symmetric(n1, delta1, delta2, delta3),
        }
    }

    pub fn n1(&self) -> usize {
        match *self {
            Self::Minimal5 => 2,
            Self::Symmetric { n1, .. } => n1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSearch {
    pub delta3: (f64, f64),
    pub delta3_samples: usize,
    pub window: (f64, f64),
    pub samples: usize,
}

impl LinkSearch {
    pub fn new(family: &LinkFamily) -> Self {
        let window = default_window(family.n1());
        Self { delta3: (0.05, 1.5), delta3_samples: 60, window, samples: default_samples(window) }
    }
}

/// `(delta3, t)` maximizing transfer from site 1 to the central receiver.
pub fn optimize_link_symmetric(family: &LinkFamily, search: &LinkSearch) -> Result<TransferOptimum> {
    check_window(search.window)?;
    let (lo, hi) = search.delta3;
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let peak = |d3: f64| -> Result<TransferPeak> {
        let layout = family.layout(d3)?;
        max_transfer(&layout, 1, layout.receiver(), search.window, search.samples)
    };
    let mut evaluations = 0usize;
    let (d3, _) = scan_then_refine(
        |d3| {
            evaluations += 1;
            peak(d3).map(|p| p.p_star).unwrap_or(f64::NEG_INFINITY)
        },
        lo,
        hi,
        search.delta3_samples,
        1e-9,
    );
    let p = peak(d3)?;
    Ok(TransferOptimum { deltas: vec![d3], t_star: p.t_star, p_star: p.p_star, evaluations, converged: true })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationRow {
    pub delta3: f64,
    pub t: f64,
    pub area_is10: f64,
    pub area_is01: f64,
    pub overlap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationScan {
    pub phi_free: f64,
    pub grid: AngleGrid,
    pub resolution: (usize, usize),
    pub policy: BranchPolicy,
}

/// Region metrics of the asymmetric line for every `(delta3, t)` cell. Row
/// order is `delta3`-major.
pub fn separation_scan_asymmetric(
    n1: usize,
    delta1: f64,
    delta2: f64,
    delta3_grid: &[f64],
    t_grid: &[f64],
    scan: &SeparationScan,
) -> Result<Vec<SeparationRow>> {
    let mut rows = Vec::with_capacity(delta3_grid.len() * t_grid.len());
    for &delta3 in delta3_grid {
        let layout = CouplingLayout::asymmetric(n1, delta1, delta2, delta3)?;
        let prop = BlockPropagator::for_layout(&layout, Sectors::OneOnly)?;
        for &t in t_grid {
            let map = ReceiverMap::new(&layout, &prop, t, crate::channel::Route::FreeFermion)?;
            let a = sweep_raster(&map, Scenario::IS10, scan.phi_free, scan.grid, scan.policy, scan.resolution)?;
            let b = sweep_raster(&map, Scenario::IS01, 0.0, scan.grid, scan.policy, scan.resolution)?;
            let m = overlap_metrics(&a, &b)?;
            rows.push(SeparationRow { delta3, t, area_is10: m.area_a, area_is01: m.area_b, overlap: m.area_overlap });
        }
    }
    Ok(rows)
}
