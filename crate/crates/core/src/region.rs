//! Creatable regions in the `(lambda, beta1)` plane.
//!
//! A sweep walks two free sender angles over a regular grid on `[0, 1]^2`,
//! maps every grid point to the receiver state, and records `(lambda, beta1,
//! beta2)`. Rasters turn sweeps into occupancy grids so that areas, overlaps
//! and containment between two regions can be measured.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ReceiverMap;
use crate::error::{Error, Result};
use crate::receiver::{BranchPolicy, InitialStateSpec, Scenario};

/// A uniform grid `0, 1/n, ..., 1` on each free angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AngleGrid {
    pub subdivisions: usize,
}

impl AngleGrid {
    pub fn new(subdivisions: usize) -> Result<Self> {
        if subdivisions == 0 {
            return Err(Error::Grid("a grid needs at least one subdivision".into()));
        }
        Ok(Self { subdivisions })
    }

    /// Grid with spacing `step`; `1 / step` must be an integer.
    pub fn from_step(step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(Error::Grid(format!("grid step {step} must lie in (0, 1]")));
        }
        let n = (1.0 / step).round();
        if (n * step - 1.0).abs() > 1e-9 {
            return Err(Error::Grid(format!("grid step {step} does not divide 1")));
        }
        Self::new(n as usize)
    }

    pub fn step(&self) -> f64 {
        1.0 / self.subdivisions as f64
    }

    pub fn len(&self) -> usize {
        self.subdivisions + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, i: usize) -> f64 {
        i as f64 / self.subdivisions as f64
    }
}

/// Which sender is active in a one-sided sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActiveSender {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSample {
    pub scenario: Scenario,
    /// `alpha11, alpha12, alpha21, alpha22, phi11, phi12, phi21, phi22`.
    pub angles: [f64; 8],
    pub lambda: f64,
    pub beta1: f64,
    pub beta2: f64,
}

/// The initial state at grid point `(u, v)` of the two free angles.
pub fn scenario_state(scenario: Scenario, u: f64, v: f64, phi_free: f64) -> Result<InitialStateSpec> {
    match scenario {
        Scenario::IS10 => InitialStateSpec::is10(u, v, phi_free),
        Scenario::IS01 => InitialStateSpec::is01(u, v),
        Scenario::IS1 => InitialStateSpec::is1(u, v),
        Scenario::IS2 => InitialStateSpec::is2(u, v),
        Scenario::IS3 => InitialStateSpec::is3(u, v),
        Scenario::IS11 => Err(Error::Grid(
            "IS11 has four free angles; it is used by the gates, not by region sweeps".into(),
        )),
    }
}

/// Sweep the two free angles of `scenario`, row-major in (first, second) angle.
pub fn sweep(
    map: &ReceiverMap,
    scenario: Scenario,
    phi_free: f64,
    grid: AngleGrid,
    policy: BranchPolicy,
) -> Result<Vec<RegionSample>> {
    // Validate once up front so the parallel loop cannot fail on the spec.
    scenario_state(scenario, 0.0, 0.0, phi_free)?;
    let rows: Result<Vec<Vec<RegionSample>>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let u = grid.value(i);
            (0..grid.len())
                .map(|j| {
                    let spec = scenario_state(scenario, u, grid.value(j), phi_free)?;
                    let s = map.state(&spec, policy)?;
                    Ok(RegionSample {
                        scenario,
                        angles: spec.angle_row(),
                        lambda: s.lambda,
                        beta1: s.beta1,
                        beta2: s.beta2,
                    })
                })
                .collect()
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

/// `IS10` (first sender, `phi12 = phi_free`) or `IS01` (second sender, real).
pub fn sweep_one_sided(
    map: &ReceiverMap,
    which: ActiveSender,
    phi_free: f64,
    grid: AngleGrid,
    policy: BranchPolicy,
) -> Result<Vec<RegionSample>> {
    match which {
        ActiveSender::First => sweep(map, Scenario::IS10, phi_free, grid, policy),
        ActiveSender::Second => sweep(map, Scenario::IS01, 0.0, grid, policy),
    }
}

pub fn sweep_two_sided(
    map: &ReceiverMap,
    scenario: Scenario,
    grid: AngleGrid,
    policy: BranchPolicy,
) -> Result<Vec<RegionSample>> {
    match scenario {
        Scenario::IS1 | Scenario::IS2 | Scenario::IS3 => sweep(map, scenario, 0.0, grid, policy),
        other => Err(Error::Grid(format!("{other} is not a two-sided region scenario"))),
    }
}

/// A constant-angle curve through a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polyline {
    pub alpha: f64,
    /// `(lambda, beta1)` in order of the other angle.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridLines {
    /// Lines of constant first free angle (`alpha11` or `alpha21`).
    pub first: Vec<Polyline>,
    /// Lines of constant second free angle (`alpha12` or `alpha22`).
    pub second: Vec<Polyline>,
}

/// Constant-angle lines every `1 / lines` from a sweep on `grid`.
pub fn grid_lines(samples: &[RegionSample], grid: AngleGrid, lines: usize) -> Result<GridLines> {
    let m = grid.len();
    if samples.len() != m * m {
        return Err(Error::Grid(format!("{} samples do not form a {m}x{m} sweep", samples.len())));
    }
    if lines == 0 || !grid.subdivisions.is_multiple_of(lines) {
        return Err(Error::Grid(format!(
            "line spacing 1/{lines} is not aligned with grid 1/{}",
            grid.subdivisions
        )));
    }
    let stride = grid.subdivisions / lines;
    let at = |i: usize, j: usize| {
        let s = &samples[i * m + j];
        (s.lambda, s.beta1)
    };
    let first = (0..=lines)
        .map(|l| Polyline { alpha: grid.value(l * stride), points: (0..m).map(|j| at(l * stride, j)).collect() })
        .collect();
    let second = (0..=lines)
        .map(|l| Polyline { alpha: grid.value(l * stride), points: (0..m).map(|i| at(i, l * stride)).collect() })
        .collect();
    Ok(GridLines { first, second })
}

/// Occupancy grid over `[0, 1]^2` in `(lambda, beta1)`.
///
/// Cells are closed on their upper edge: a point exactly on a cell boundary
/// belongs to the lower-index cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionRaster {
    n_lambda: usize,
    n_beta: usize,
    occupancy: Vec<bool>,
}

pub const MIN_RESOLUTION: usize = 32;

fn cell(x: f64, n: usize) -> usize {
    let c = (x * n as f64).ceil() as i64 - 1;
    c.clamp(0, n as i64 - 1) as usize
}

impl RegionRaster {
    pub fn empty(n_lambda: usize, n_beta: usize) -> Result<Self> {
        if n_lambda < MIN_RESOLUTION || n_beta < MIN_RESOLUTION {
            return Err(Error::Raster(format!(
                "resolution {n_lambda}x{n_beta} is below {MIN_RESOLUTION}x{MIN_RESOLUTION}"
            )));
        }
        Ok(Self { n_lambda, n_beta, occupancy: vec![false; n_lambda * n_beta] })
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.n_lambda, self.n_beta)
    }

    pub fn cell_of(&self, lambda: f64, beta1: f64) -> (usize, usize) {
        (cell(lambda, self.n_lambda), cell(beta1, self.n_beta))
    }

    pub fn mark(&mut self, lambda: f64, beta1: f64) {
        let (i, j) = self.cell_of(lambda, beta1);
        self.occupancy[i * self.n_beta + j] = true;
    }

    pub fn is_occupied(&self, i: usize, j: usize) -> bool {
        self.occupancy[i * self.n_beta + j]
    }

    pub fn contains(&self, lambda: f64, beta1: f64) -> bool {
        let (i, j) = self.cell_of(lambda, beta1);
        self.is_occupied(i, j)
    }

    pub fn cell_area(&self) -> f64 {
        1.0 / (self.n_lambda * self.n_beta) as f64
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    pub fn area(&self) -> f64 {
        self.occupied_count() as f64 * self.cell_area()
    }

    pub fn occupied_cells(&self) -> Vec<(usize, usize)> {
        (0..self.n_lambda)
            .flat_map(|i| (0..self.n_beta).map(move |j| (i, j)))
            .filter(|&(i, j)| self.is_occupied(i, j))
            .collect()
    }

    /// Cells whose eight neighbors are all occupied; cells outside the
    /// square count as empty.
    pub fn interior(&self) -> Self {
        let (n, m) = (self.n_lambda as i64, self.n_beta as i64);
        let occ = |i: i64, j: i64| (0..n).contains(&i) && (0..m).contains(&j) && self.is_occupied(i as usize, j as usize);
        let mut out = Self { occupancy: vec![false; self.occupancy.len()], ..*self };
        for i in 0..n {
            for j in 0..m {
                let inner = (-1..=1).all(|di| (-1..=1).all(|dj| occ(i + di, j + dj)));
                out.occupancy[(i * m + j) as usize] = inner;
            }
        }
        out
    }

    fn union_with(&mut self, other: &Self) {
        for (a, b) in self.occupancy.iter_mut().zip(&other.occupancy) {
            *a |= *b;
        }
    }

    pub fn to_document(&self) -> RasterDocument {
        RasterDocument { resolution: (self.n_lambda, self.n_beta), occupied_cells: self.occupied_cells() }
    }

    pub fn from_document(doc: &RasterDocument) -> Result<Self> {
        let mut r = Self::empty(doc.resolution.0, doc.resolution.1)?;
        for &(i, j) in &doc.occupied_cells {
            if i >= r.n_lambda || j >= r.n_beta {
                return Err(Error::Raster(format!("cell ({i}, {j}) outside the raster")));
            }
            r.occupancy[i * r.n_beta + j] = true;
        }
        Ok(r)
    }
}

/// JSON form: `{"resolution": [n_lambda, n_beta], "occupied_cells": [[i, j], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RasterDocument {
    pub resolution: (usize, usize),
    pub occupied_cells: Vec<(usize, usize)>,
}

pub fn rasterize(samples: &[RegionSample], resolution: (usize, usize)) -> Result<RegionRaster> {
    if samples.is_empty() {
        return Err(Error::Raster("cannot rasterize an empty sample list".into()));
    }
    let mut r = RegionRaster::empty(resolution.0, resolution.1)?;
    for s in samples {
        r.mark(s.lambda, s.beta1);
    }
    Ok(r)
}

/// Rasterize a sweep without keeping the samples; used for the fine sweeps
/// that fill a raster densely.
pub fn sweep_raster(
    map: &ReceiverMap,
    scenario: Scenario,
    phi_free: f64,
    grid: AngleGrid,
    policy: BranchPolicy,
    resolution: (usize, usize),
) -> Result<RegionRaster> {
    let blank = RegionRaster::empty(resolution.0, resolution.1)?;
    scenario_state(scenario, 0.0, 0.0, phi_free)?;
    let rows: Result<Vec<RegionRaster>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut r = blank.clone();
            for j in 0..grid.len() {
                let spec = scenario_state(scenario, grid.value(i), grid.value(j), phi_free)?;
                let s = map.state(&spec, policy)?;
                r.mark(s.lambda, s.beta1);
            }
            Ok(r)
        })
        .collect();
    let mut out = blank;
    for r in rows? {
        out.union_with(&r);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapMetrics {
    pub area_a: f64,
    pub area_b: f64,
    pub area_overlap: f64,
    /// `|A ∩ B| / |B|`.
    pub containment_b_in_a: f64,
    /// Overlap of the two interiors. Regions that only touch along a shared
    /// boundary, such as the common ground-state corner, give zero here.
    pub interior_overlap: f64,
}

pub fn overlap_metrics(a: &RegionRaster, b: &RegionRaster) -> Result<OverlapMetrics> {
    if a.resolution() != b.resolution() {
        return Err(Error::Raster(format!(
            "resolutions differ: {:?} vs {:?}",
            a.resolution(),
            b.resolution()
        )));
    }
    let count_both = |a: &RegionRaster, b: &RegionRaster| a.occupancy.iter().zip(&b.occupancy).filter(|(x, y)| **x && **y).count();
    let both = count_both(a, b);
    let inner = count_both(&a.interior(), &b.interior());
    let nb = b.occupied_count();
    Ok(OverlapMetrics {
        area_a: a.area(),
        area_b: b.area(),
        area_overlap: both as f64 * a.cell_area(),
        containment_b_in_a: if nb == 0 { 0.0 } else { both as f64 / nb as f64 },
        interior_overlap: inner as f64 * a.cell_area(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    OnlyS1,
    OnlyS2,
    Both,
    Neither,
}

/// Which sender's region contains the receiver state `(lambda, beta1)`.
pub fn classify_state(point: (f64, f64), s1: &RegionRaster, s2: &RegionRaster) -> Result<Membership> {
    if s1.resolution() != s2.resolution() {
        return Err(Error::Raster("rasters must share a resolution".into()));
    }
    Ok(match (s1.contains(point.0, point.1), s2.contains(point.0, point.1)) {
        (true, true) => Membership::Both,
        (true, false) => Membership::OnlyS1,
        (false, true) => Membership::OnlyS2,
        (false, false) => Membership::Neither,
    })
}
