//! One runner per subcommand. Runners compute everything first and return
//! the bytes to write; the caller is the only writer.

use anyhow::{Context, Result};
use serde_json::json;
use spinline::basis::{Basis, BasisIndex};
use spinline::cache::PropagatorCache;
use spinline::channel::{ReceiverMap, Route};
use spinline::evolution::{evolve, evolve_fast, BlockPropagator, Sectors};
use spinline::gates::{gate1_trace, gate2_domain, NewtonOptions};
use spinline::layout::{preset, CouplingLayout, Topology, PRESETS};
use spinline::optimize::{
    default_samples, default_window, max_transfer_prop, optimize_boundary, optimize_link_symmetric,
    separation_scan_asymmetric, BoundarySearch, LinkFamily, LinkSearch, SeparationScan,
};
use spinline::output::{fmt_g, write_gate_csv, write_receiver_csv, write_region_csv};
use spinline::receiver::{assemble_initial, BranchPolicy, InitialStateSpec, Scenario, SenderAngles, SenderInput};
use spinline::region::{overlap_metrics, sweep, sweep_raster, AngleGrid};

use crate::config::*;

pub struct Output {
    pub main: Vec<u8>,
    /// `(suffix, bytes)` written next to the main file.
    pub extras: Vec<(String, Vec<u8>)>,
}

impl Output {
    fn single(main: Vec<u8>) -> Self {
        Self { main, extras: Vec::new() }
    }
}

const DEFAULT_GRID_STEP: f64 = 1.0 / 64.0;
const DEFAULT_RASTER: usize = 128;
/// Dense sweeps for rasters use this many angle steps per raster cell.
const RASTER_OVERSAMPLING: usize = 8;

fn json_bytes(v: &impl serde::Serialize) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serializable");
    s.push(b'\n');
    s
}

fn policy(c: &Common) -> Result<BranchPolicy> {
    match &c.policy {
        None => Ok(BranchPolicy::default()),
        Some(p) => p.parse().map_err(|e: spinline::Error| usage(e.to_string())),
    }
}

fn topology(name: &str) -> Result<Topology> {
    serde_json::from_value(json!(name))
        .map_err(|_| usage(format!("unknown topology '{name}' (asymmetric|symmetric|minimal5|single_channel)")))
}

/// Line parameters after applying explicit values over the preset.
struct Line {
    topology: Topology,
    n1: Option<usize>,
    deltas: [Option<f64>; 3],
    t0: Option<f64>,
}

fn line(c: &Common) -> Result<Line> {
    let base = match &c.preset {
        Some(name) => {
            let p = preset(name).ok_or_else(|| {
                let names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
                usage(format!("unknown preset '{name}' (one of {})", names.join(", ")))
            })?;
            Line { topology: p.topology, n1: Some(p.n1), deltas: [p.delta1, p.delta2, Some(p.delta3)], t0: Some(p.t0) }
        }
        None => match &c.topology {
            Some(t) => Line { topology: topology(t)?, n1: None, deltas: [None; 3], t0: None },
            None => return Err(usage("give --preset or --topology")),
        },
    };
    Ok(Line {
        topology: match &c.topology {
            Some(t) => topology(t)?,
            None => base.topology,
        },
        n1: c.n1.or(base.n1),
        deltas: [c.delta1.or(base.deltas[0]), c.delta2.or(base.deltas[1]), c.delta3.or(base.deltas[2])],
        t0: c.t0.or(base.t0),
    })
}

impl Line {
    fn need<T>(v: Option<T>, what: &str) -> Result<T> {
        v.ok_or_else(|| usage(format!("missing --{what}")))
    }

    fn layout(&self) -> Result<CouplingLayout> {
        let n1 = || Self::need(self.n1, "n1");
        let d = |k: usize| Self::need(self.deltas[k], ["delta1", "delta2", "delta3"][k]);
        Ok(match self.topology {
            Topology::Asymmetric => CouplingLayout::asymmetric(n1()?, d(0)?, d(1)?, d(2)?)?,
            Topology::Symmetric => CouplingLayout::symmetric(n1()?, d(0)?, d(1)?, d(2)?)?,
            Topology::Minimal5 => CouplingLayout::minimal5(d(2)?)?,
            Topology::SingleChannel => CouplingLayout::single_channel(n1()?, d(0)?, d(1)?)?,
        })
    }

    fn t0(&self) -> Result<f64> {
        Self::need(self.t0, "t0")
    }
}

fn propagator(layout: &CouplingLayout, sectors: Sectors) -> Result<BlockPropagator> {
    match PropagatorCache::from_env() {
        Some(cache) => cache.get_or_build(layout, sectors).context("propagator cache"),
        None => Ok(BlockPropagator::for_layout(layout, sectors)?),
    }
}

fn route(s: &StateArgs) -> Result<Route> {
    match s.route.as_deref() {
        None | Some("fermion") => Ok(Route::FreeFermion),
        Some("dense") => Ok(Route::Dense),
        Some(r) => Err(usage(format!("unknown route '{r}' (fermion|dense)"))),
    }
}

fn receiver_map(layout: &CouplingLayout, t: f64, route: Route) -> Result<ReceiverMap> {
    let sectors = if route == Route::Dense { Sectors::Both } else { Sectors::OneOnly };
    Ok(ReceiverMap::new(layout, &propagator(layout, sectors)?, t, route)?)
}

fn state_spec(s: &StateArgs) -> Result<InitialStateSpec> {
    let scenario: Scenario =
        s.scenario.as_deref().unwrap_or("IS10").parse().map_err(|e: spinline::Error| usage(e.to_string()))?;
    let four = |v: &Option<Vec<f64>>, what: &str, default: f64| -> Result<[f64; 4]> {
        match v {
            None => Ok([default; 4]),
            Some(x) => x.as_slice().try_into().map_err(|_| usage(format!("--{what} takes four comma-separated values"))),
        }
    };
    let a = four(&s.alpha, "alpha", 0.5)?;
    let p = four(&s.phi, "phi", 0.0)?;
    let s1 = || SenderAngles::new(a[0], a[1], p[0], p[1]).map(SenderInput::Angles);
    let s2 = || SenderAngles::new(a[2], a[3], p[2], p[3]).map(SenderInput::Angles);
    let mut spec = match scenario {
        Scenario::IS10 => InitialStateSpec::new(s1()?, SenderInput::Ground),
        Scenario::IS01 => InitialStateSpec::new(SenderInput::Ground, s2()?),
        Scenario::IS11 => InitialStateSpec::new(s1()?, s2()?),
        Scenario::IS1 => InitialStateSpec::is1(a[0], a[1])?,
        Scenario::IS2 => InitialStateSpec::is2(a[2], a[3])?,
        Scenario::IS3 => InitialStateSpec::is3(a[0], a[1])?,
    };
    spec.scenario = Some(scenario);
    spec.validate()?;
    Ok(spec)
}

fn angle_grid(c: &Common, default: f64) -> Result<AngleGrid> {
    Ok(AngleGrid::from_step(c.grid_step.unwrap_or(default))?)
}

fn dense_grid(c: &Common, raster: usize) -> Result<AngleGrid> {
    match c.grid_step {
        Some(step) => Ok(AngleGrid::from_step(step)?),
        None => Ok(AngleGrid::new(RASTER_OVERSAMPLING * raster)?),
    }
}

pub fn presets() -> Result<Output> {
    let list: Vec<_> = PRESETS
        .iter()
        .map(|p| {
            json!({
                "name": p.name, "topology": p.topology, "n1": p.n1,
                "delta1": p.delta1, "delta2": p.delta2, "delta3": p.delta3, "t0": p.t0,
            })
        })
        .collect();
    Ok(Output::single(json_bytes(&list)))
}

pub fn evolve_cmd(rc: &RunConfig<EvolveArgs>) -> Result<Output> {
    let line = line(&rc.common)?;
    let layout = line.layout()?;
    let times = match &rc.args.times {
        Some(t) => parse_grid(t, "times")?,
        None => parse_grid(&format!("0:{}:{}", line.t0()?, line.t0()? / 50.0), "times")?,
    };
    let spec = state_spec(&rc.args.state)?;
    let basis = Basis::new(layout.n_sites())?;
    let psi0 = assemble_initial(&spec, &layout, &basis)?;
    let dense = route(&rc.args.state)? == Route::Dense;
    let prop = propagator(&layout, if dense { Sectors::Both } else { Sectors::OneOnly })?;
    let mut out = String::from("t,site,occupation\n");
    for &t in &times {
        let psi = if dense { evolve(&prop, &psi0, t)? } else { evolve_fast(&prop, &psi0, t)? };
        let mut occ = psi.singles.iter().map(|c| c.norm_sqr()).collect::<Vec<_>>();
        for (k, c) in psi.pairs.iter().enumerate() {
            if let BasisIndex::Pair(i, j) = basis.state_at(1 + basis.n_sites() + k)? {
                occ[i - 1] += c.norm_sqr();
                occ[j - 1] += c.norm_sqr();
            }
        }
        for (s, o) in occ.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", fmt_g(t), s + 1, fmt_g(*o)));
        }
    }
    Ok(Output::single(out.into_bytes()))
}

pub fn receiver_cmd(rc: &RunConfig<ReceiverArgs>) -> Result<Output> {
    let line = line(&rc.common)?;
    let layout = line.layout()?;
    let spec = state_spec(&rc.args.state)?;
    let map = receiver_map(&layout, line.t0()?, route(&rc.args.state)?)?;
    let state = map.state(&spec, policy(&rc.common)?)?;
    let mut out = Vec::new();
    write_receiver_csv(&mut out, &[state])?;
    Ok(Output::single(out))
}

pub fn region_cmd(rc: &RunConfig<RegionArgs>) -> Result<Output> {
    let line = line(&rc.common)?;
    let layout = line.layout()?;
    let scenario: Scenario =
        rc.args.scenario.as_deref().unwrap_or("IS10").parse().map_err(|e: spinline::Error| usage(e.to_string()))?;
    let phi = rc.args.phi12.unwrap_or(0.0);
    let policy = policy(&rc.common)?;
    let map = receiver_map(&layout, line.t0()?, Route::FreeFermion)?;
    let grid = angle_grid(&rc.common, DEFAULT_GRID_STEP)?;
    let samples = sweep(&map, scenario, phi, grid, policy)?;
    let mut out = Vec::new();
    write_region_csv(&mut out, &samples)?;
    let mut extras = Vec::new();
    if let Some(res) = rc.common.raster {
        let dense = AngleGrid::new((RASTER_OVERSAMPLING * res).max(grid.len() - 1))?;
        let r = sweep_raster(&map, scenario, phi, dense, policy, (res, res))?;
        extras.push(("raster.json".into(), json_bytes(&r.to_document())));
    }
    Ok(Output { main: out, extras })
}

pub fn overlap_cmd(rc: &RunConfig<OverlapArgs>) -> Result<Output> {
    let line = line(&rc.common)?;
    let layout = line.layout()?;
    let phi = rc.args.phi12.unwrap_or(0.0);
    let policy = policy(&rc.common)?;
    let res = rc.common.raster.unwrap_or(DEFAULT_RASTER);
    let grid = dense_grid(&rc.common, res)?;
    let map = receiver_map(&layout, line.t0()?, Route::FreeFermion)?;
    let a = sweep_raster(&map, Scenario::IS10, phi, grid, policy, (res, res))?;
    let b = sweep_raster(&map, Scenario::IS01, 0.0, grid, policy, (res, res))?;
    let m = overlap_metrics(&a, &b)?;
    let summary = json!({
        "phi12": phi, "policy": policy.as_str(), "resolution": [res, res], "subdivisions": grid.len() - 1,
        "area_is10": m.area_a, "area_is01": m.area_b, "area_overlap": m.area_overlap,
        "interior_overlap": m.interior_overlap, "containment_is01_in_is10": m.containment_b_in_a,
    });
    Ok(Output {
        main: json_bytes(&summary),
        extras: vec![
            ("is10.raster.json".into(), json_bytes(&a.to_document())),
            ("is01.raster.json".into(), json_bytes(&b.to_document())),
        ],
    })
}

fn window_or(text: &Option<String>, n1: usize) -> Result<(f64, f64)> {
    match text {
        Some(w) => parse_interval(w, "window"),
        None => Ok(default_window(n1)),
    }
}

pub fn transfer_cmd(rc: &RunConfig<TransferArgs>) -> Result<Output> {
    let layout = line(&rc.common)?.layout()?;
    let from = rc.args.from.unwrap_or(layout.sender1().0);
    let to = rc.args.to.unwrap_or(layout.receiver());
    let window = window_or(&rc.args.window, layout.n1())?;
    let samples = rc.args.samples.unwrap_or_else(|| default_samples(window));
    let peak = max_transfer_prop(&propagator(&layout, Sectors::OneOnly)?, from, to, window, samples)?;
    Ok(Output::single(json_bytes(&json!({
        "from": from, "to": to, "window": [window.0, window.1], "p_star": peak.p_star, "t_star": peak.t_star,
    }))))
}

pub fn optimize_boundary_cmd(rc: &RunConfig<OptimizeBoundaryArgs>) -> Result<Output> {
    let n1 = match (rc.common.n1, &rc.common.preset) {
        (Some(n), _) => n,
        (None, Some(_)) => line(&rc.common)?.n1.ok_or_else(|| usage("missing --n1"))?,
        (None, None) => return Err(usage("missing --n1")),
    };
    let mut search = BoundarySearch::new(n1);
    if let Some(b) = &rc.args.delta1_box {
        search.delta1 = parse_interval(b, "delta1-box")?;
    }
    if let Some(b) = &rc.args.delta2_box {
        search.delta2 = parse_interval(b, "delta2-box")?;
    }
    search.window = window_or(&rc.args.window, n1)?;
    search.samples = rc.args.samples.unwrap_or_else(|| default_samples(search.window));
    if let Some(g) = rc.args.seed_grid {
        search.seed_grid = g;
    }
    let o = optimize_boundary(n1, &search)?;
    if !o.converged {
        eprintln!("warning: simplex stopped on its evaluation budget; reporting the best point found");
    }
    Ok(Output::single(json_bytes(&o)))
}

pub fn optimize_link_cmd(rc: &RunConfig<OptimizeLinkArgs>) -> Result<Output> {
    let line = line(&rc.common)?;
    let family = match line.topology {
        Topology::Minimal5 => LinkFamily::Minimal5,
        Topology::Symmetric => LinkFamily::Symmetric {
            n1: Line::need(line.n1, "n1")?,
            delta1: Line::need(line.deltas[0], "delta1")?,
            delta2: Line::need(line.deltas[1], "delta2")?,
        },
        t => return Err(usage(format!("optimize-link needs a symmetric or minimal5 line, not {t:?}"))),
    };
    let mut search = LinkSearch::new(&family);
    if let Some(b) = &rc.args.delta3_box {
        search.delta3 = parse_interval(b, "delta3-box")?;
    }
    if let Some(n) = rc.args.delta3_samples {
        search.delta3_samples = n;
    }
    search.window = window_or(&rc.args.window, family.n1())?;
    search.samples = rc.args.samples.unwrap_or_else(|| default_samples(search.window));
    Ok(Output::single(json_bytes(&optimize_link_symmetric(&family, &search)?)))
}

pub fn separation_cmd(rc: &RunConfig<SeparationArgs>) -> Result<Output> {
    let line = line(&rc.common)?;
    if line.topology != Topology::Asymmetric {
        return Err(usage("separation-scan needs an asymmetric line"));
    }
    let d3 = match &rc.args.delta3_grid {
        Some(g) => parse_grid(g, "delta3-grid")?,
        None => vec![Line::need(line.deltas[2], "delta3")?],
    };
    let ts = match &rc.args.t_grid {
        Some(g) => parse_grid(g, "t-grid")?,
        None => vec![line.t0()?],
    };
    let res = rc.common.raster.unwrap_or(DEFAULT_RASTER);
    let scan = SeparationScan {
        phi_free: rc.args.phi12.unwrap_or(0.0),
        grid: angle_grid(&rc.common, DEFAULT_GRID_STEP)?,
        resolution: (res, res),
        policy: policy(&rc.common)?,
    };
    let rows = separation_scan_asymmetric(
        Line::need(line.n1, "n1")?,
        Line::need(line.deltas[0], "delta1")?,
        Line::need(line.deltas[1], "delta2")?,
        &d3,
        &ts,
        &scan,
    )?;
    let mut out = String::from("delta3,t,area_is10,area_is01,overlap\n");
    for r in rows {
        let v = [r.delta3, r.t, r.area_is10, r.area_is01, r.overlap].map(fmt_g);
        out.push_str(&v.join(","));
        out.push('\n');
    }
    Ok(Output::single(out.into_bytes()))
}

/// Gates assume the mirror image of sender 1 is sender 2 about the receiver.
fn require_centered(layout: &CouplingLayout, command: &str) -> Result<()> {
    if layout.is_mirror_symmetric() && 2 * layout.receiver() == layout.n_sites() + 1 {
        Ok(())
    } else {
        Err(usage(format!("{command} needs a mirror-symmetric line with a central receiver (symmetric or minimal5)")))
    }
}

pub fn gate1_cmd(rc: &RunConfig<Gate1Args>) -> Result<Output> {
    let line = line(&rc.common)?;
    let layout = line.layout()?;
    require_centered(&layout, "gate1")?;
    let grid = parse_grid(rc.args.lambda_grid.as_deref().unwrap_or("0.67:0.93:0.005"), "lambda-grid")?;
    let map = receiver_map(&layout, line.t0()?, Route::FreeFermion)?;
    let trace = gate1_trace(&map, &grid, &NewtonOptions::default(), rc.seed())?;
    let mut out = Vec::new();
    write_gate_csv(&mut out, &trace.feasible())?;
    let infeasible: Vec<f64> =
        grid.iter().zip(&trace.curve).filter(|(_, c)| c.is_none()).map(|(l, _)| *l).collect();
    let summary = json!({
        "interval": trace.summary.map(|s| [s.lambda.min, s.lambda.max]),
        "summary": trace.summary,
        "lower_end": trace.lower_end,
        "upper_end": trace.upper_end,
        "infeasible_lambdas": infeasible,
    });
    Ok(Output { main: out, extras: vec![("summary.json".into(), json_bytes(&summary))] })
}

pub fn gate2_cmd(rc: &RunConfig<Gate2Args>) -> Result<Output> {
    let line = line(&rc.common)?;
    let layout = line.layout()?;
    require_centered(&layout, "gate2")?;
    let map = receiver_map(&layout, line.t0()?, Route::FreeFermion)?;
    let n = rc.args.samples.unwrap_or(5000);
    if n == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    let recs = gate2_domain(&map, n, rc.seed(), &NewtonOptions::default());
    let mut out = Vec::new();
    write_gate_csv(&mut out, &recs)?;
    Ok(Output::single(out))
}
