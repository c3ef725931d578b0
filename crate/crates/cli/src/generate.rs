use anyhow::Result;
use epkit::generate;
use epkit::io::{System, SystemFile};

use crate::{GenKind, GenerateArgs};

pub fn run(args: &GenerateArgs) -> Result<()> {
    let system = match args.kind {
        GenKind::Polytope => {
            let nx = args.nx.clamp(1, 8);
            let ny = args.ny.min(50);
            let rows = args.rows.clamp(nx + ny + 1, 1000);
            System::Polytope(generate::random_polytope(nx, ny, rows, &mut generate::rng(args.seed)))
        }
        GenKind::MultiArea => {
            System::MultiArea(generate::multi_area(args.areas, args.min_nodes, args.max_nodes, args.boundary.clamp(1, 20), args.seed))
        }
        GenKind::TransmissionDistribution => {
            System::TransmissionDistribution(generate::td_system(args.tn_nodes, args.feeders, args.feeder_nodes, args.seed))
        }
    };
    SystemFile::new(system).write(&args.output)?;
    Ok(())
}
