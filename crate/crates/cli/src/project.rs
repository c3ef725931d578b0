use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use epkit::fme;
use epkit::geometry::{same_vertex_set, VRep};
use epkit::io::{self, System, SystemFile};
use epkit::pve::{self, PveConfig, PveStatus};

use crate::{Oracle, ProjectArgs};

const MATCH_TOL: f64 = 1e-6;

pub fn run(args: &ProjectArgs) -> Result<ExitCode> {
    let file = SystemFile::read(&args.input)?;
    let System::Polytope(region) = file.system else {
        bail!("{}: expected a system of kind polytope, found {:?}", args.input.display(), file.system.kind());
    };
    let config = PveConfig { epsilon: args.eps, max_outer_loops: args.max_loops, parallel_inner: args.parallel, ..PveConfig::default() };
    let result = pve::project(&region, &config)?;
    let mut json = serde_json::to_string_pretty(&result)?;
    json.push('\n');
    std::fs::write(&args.output, json).with_context(|| format!("writing {}", args.output.display()))?;

    let status = match result.status {
        PveStatus::Converged => "converged",
        PveStatus::MaxLoopsReached => "max_loops_reached",
    };
    println!("status: {status}");
    println!("outer_loops: {}", result.outer_loops);
    println!("vertices: {}", result.hull.vertices.len());
    println!("facets: {}", result.hull.facets.len());
    println!("final_error: {:?}", result.final_error());
    match result.hausdorff_bound {
        Some(b) => println!("hausdorff_bound: {b:?}"),
        None => println!("hausdorff_bound: none"),
    }
    println!("lp_solves: {}", result.lp_solves);

    if args.oracle == Oracle::Fme {
        match fme::exact_projection(&region) {
            Ok(exact) => {
                println!("oracle_vertices: {}", exact.vertices.len());
                println!("vertex_sets_match: {}", same_vertex_set(&result.hull.vertices, &exact.vertices, MATCH_TOL));
                println!("hausdorff_gap: {:?}", pve::hausdorff_error(&result.hull, &exact));
            }
            Err(e) => eprintln!("warning: oracle unavailable: {e}"),
        }
    }

    write_exports(args, &result.hull)?;
    Ok(match result.status {
        PveStatus::Converged => ExitCode::SUCCESS,
        PveStatus::MaxLoopsReached => ExitCode::from(2),
    })
}

fn write_exports(args: &ProjectArgs, hull: &VRep) -> Result<()> {
    if let Some(path) = &args.vertices_csv {
        std::fs::write(path, io::vertices_csv(hull)).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.facets_csv {
        std::fs::write(path, io::facets_csv(hull)).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.svg {
        let (i, j) = (args.axes[0], args.axes[1]);
        if hull.dim < 2 {
            bail!("an SVG needs at least two coordinates; the region has {}", hull.dim);
        }
        if i >= hull.dim || j >= hull.dim || i == j {
            bail!("--axes {i} {j} do not name two distinct coordinates of a {}-dimensional region", hull.dim);
        }
        let polygon = io::shadow(hull, i, j);
        std::fs::write(path, io::svg(&polygon, &format!("x{i}"), &format!("x{j}")))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
