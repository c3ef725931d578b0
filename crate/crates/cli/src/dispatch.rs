use std::time::Instant;

use anyhow::{bail, Context, Result};
use epkit::io::{System, SystemFile};
use epkit::macod::{self, DispatchResult, MultiAreaSystem};
use epkit::pve::{PveConfig, PveResult};
use epkit::tdcod::{self, TdDispatch, TdSystem};
use serde::Serialize;

use crate::{DispatchArgs, Mode};

/// Step times of one protocol run, in seconds.
#[derive(Debug, Clone, Copy, Serialize)]
struct Timing {
    /// Longest single projection, since subsystems project concurrently.
    ep: f64,
    coordinator: f64,
    redispatch: f64,
    total: f64,
}

impl Timing {
    fn new(ep_seconds: &[f64], coordinator: f64, redispatch: f64) -> Self {
        let ep = ep_seconds.iter().copied().fold(0.0, f64::max);
        Self { ep, coordinator, redispatch, total: ep + coordinator + redispatch }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn median_timing(runs: &[Timing]) -> Timing {
    let pick = |f: fn(&Timing) -> f64| median(runs.iter().map(f).collect());
    Timing { ep: pick(|t| t.ep), coordinator: pick(|t| t.coordinator), redispatch: pick(|t| t.redispatch), total: pick(|t| t.total) }
}

#[derive(Serialize)]
struct Joint {
    objective: f64,
    relative_gap: f64,
    seconds: f64,
}

#[derive(Serialize)]
struct Subsystem {
    vertices: usize,
    facets: usize,
    outer_loops: usize,
    cost: f64,
    /// Boundary injections (MACOD) or feeder export (TDCOD), MW.
    exchange: Vec<f64>,
}

#[derive(Serialize)]
struct Report {
    mode: &'static str,
    epsilon: f64,
    objective: f64,
    subsystems: Vec<Subsystem>,
    timing: Timing,
    timing_runs: usize,
    joint: Option<Joint>,
}

/// Deterministic result file: everything but timings.
#[derive(Serialize)]
struct ResultFile<'a, S> {
    mode: &'static str,
    epsilon: f64,
    eps: &'a [PveResult],
    schedule: &'a S,
}

fn relative_gap(ep: f64, joint: f64) -> f64 {
    (ep - joint).abs() / joint.abs().max(1e-12)
}

fn timed<T>(f: impl FnOnce() -> epkit::Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let value = f()?;
    Ok((value, start.elapsed().as_secs_f64()))
}

pub fn run(args: &DispatchArgs) -> Result<()> {
    let file = SystemFile::read(&args.input)?;
    let config = PveConfig { epsilon: args.eps, max_outer_loops: args.max_loops, parallel_inner: args.parallel, ..PveConfig::default() };
    let runs = args.timing_runs.max(1);
    let report = match (args.mode, file.system) {
        (Mode::Macod, System::MultiArea(system)) => run_macod(args, &system, &config, runs)?,
        (Mode::Tdcod, System::TransmissionDistribution(system)) => run_tdcod(args, &system, &config, runs)?,
        (mode, system) => {
            let expected = if mode == Mode::Macod { "multi_area" } else { "transmission_distribution" };
            bail!("{}: mode needs a system of kind {expected}, found {:?}", args.input.display(), system.kind());
        }
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print_text(&report);
    }
    Ok(())
}

fn write_result<S: Serialize>(args: &DispatchArgs, mode: &'static str, eps: &[PveResult], schedule: &S) -> Result<()> {
    if let Some(path) = &args.output {
        let mut json = serde_json::to_string_pretty(&ResultFile { mode, epsilon: args.eps, eps, schedule })?;
        json.push('\n');
        std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn run_macod(args: &DispatchArgs, system: &MultiAreaSystem, config: &PveConfig, runs: usize) -> Result<Report> {
    let mut timings = Vec::new();
    let mut last = None;
    for _ in 0..runs {
        let c = macod::coordinate(system, config, args.parallel)?;
        timings.push(Timing::new(&c.ep_seconds, c.coordinator_seconds, c.regional_seconds));
        last = Some(c);
    }
    let c = last.expect("at least one run");
    write_result::<DispatchResult>(args, "macod", &c.eps, &c.dispatch)?;
    let joint = if args.compare_joint {
        let (j, seconds) = timed(|| macod::solve_joint(system))?;
        Some(Joint { objective: j.objective, relative_gap: relative_gap(c.dispatch.objective, j.objective), seconds })
    } else {
        None
    };
    let subsystems = c
        .eps
        .iter()
        .enumerate()
        .map(|(k, ep)| Subsystem {
            vertices: ep.hull.vertices.len(),
            facets: ep.hull.facets.len(),
            outer_loops: ep.outer_loops,
            cost: c.dispatch.area_costs[k],
            exchange: c.dispatch.boundary_injections[k].clone(),
        })
        .collect();
    Ok(Report {
        mode: "macod",
        epsilon: args.eps,
        objective: c.dispatch.objective,
        subsystems,
        timing: median_timing(&timings),
        timing_runs: runs,
        joint,
    })
}

fn run_tdcod(args: &DispatchArgs, system: &TdSystem, config: &PveConfig, runs: usize) -> Result<Report> {
    let mut timings = Vec::new();
    let mut last = None;
    for _ in 0..runs {
        let c = tdcod::coordinate(system, config, args.parallel)?;
        timings.push(Timing::new(&c.ep_seconds, c.coordinator_seconds, c.feeder_seconds));
        last = Some(c);
    }
    let c = last.expect("at least one run");
    write_result::<TdDispatch>(args, "tdcod", &c.eps, &c.dispatch)?;
    let joint = if args.compare_joint {
        let (j, seconds) = timed(|| tdcod::solve_joint_td(system))?;
        Some(Joint { objective: j.objective, relative_gap: relative_gap(c.dispatch.objective, j.objective), seconds })
    } else {
        None
    };
    let subsystems = c
        .eps
        .iter()
        .enumerate()
        .map(|(k, ep)| Subsystem {
            vertices: ep.hull.vertices.len(),
            facets: ep.hull.facets.len(),
            outer_loops: ep.outer_loops,
            cost: c.dispatch.feeder_costs[k],
            exchange: vec![c.dispatch.feeder_exports[k]],
        })
        .collect();
    Ok(Report {
        mode: "tdcod",
        epsilon: args.eps,
        objective: c.dispatch.objective,
        subsystems,
        timing: median_timing(&timings),
        timing_runs: runs,
        joint,
    })
}

fn print_text(r: &Report) {
    let unit = if r.mode == "macod" { "area" } else { "feeder" };
    println!("mode: {}", r.mode);
    println!("epsilon: {}", r.epsilon);
    for (k, s) in r.subsystems.iter().enumerate() {
        let exchange: Vec<String> = s.exchange.iter().map(|v| format!("{v:.4}")).collect();
        println!(
            "{unit} {k}: cost {:.4} $/h, exchange [{}] MW, EP {} vertices / {} facets in {} loops",
            s.cost,
            exchange.join(", "),
            s.vertices,
            s.facets,
            s.outer_loops
        );
    }
    let runs = if r.timing_runs > 1 { format!(" (median of {} runs)", r.timing_runs) } else { String::new() };
    println!("time{runs}:");
    println!("  EP (longest {unit}): {:.6} s", r.timing.ep);
    println!("  coordinator: {:.6} s", r.timing.coordinator);
    println!("  re-dispatch: {:.6} s", r.timing.redispatch);
    println!("  total EP-based coordination: {:.6} s", r.timing.total);
    println!("objective: {:.6}", r.objective);
    if let Some(j) = &r.joint {
        println!("joint objective: {:.6}", j.objective);
        println!("joint time: {:.6} s", j.seconds);
        println!("relative_gap: {:e}", j.relative_gap);
    }
}
