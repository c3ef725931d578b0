//! `epkit`: polytope projection and coordinated dispatch from the command line.

mod dispatch;
mod generate;
mod project;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "epkit", version, about = "Equivalent-projection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Project a polytope onto its coordination variables.
    Project(ProjectArgs),
    /// Run a coordinated dispatch on a multi-area or T&D system.
    Dispatch(DispatchArgs),
    /// Write a seeded random system file.
    Generate(GenerateArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum Oracle {
    Fme,
    None,
}

#[derive(clap::Args)]
pub struct ProjectArgs {
    /// System file of kind `polytope`.
    #[arg(long)]
    pub input: PathBuf,
    /// Hausdorff tolerance.
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    /// Result JSON (vertices, facets, error trace).
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Oracle::None)]
    pub oracle: Oracle,
    #[arg(long, default_value_t = 100)]
    pub max_loops: usize,
    /// Solve the searches of each loop in parallel.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub parallel: bool,
    /// SVG of the region; regions above two dimensions are drawn as their
    /// shadow on `--axes`.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Coordinate pair for the SVG shadow.
    #[arg(long, num_args = 2, default_values_t = [0, 1])]
    pub axes: Vec<usize>,
    #[arg(long)]
    pub vertices_csv: Option<PathBuf>,
    #[arg(long)]
    pub facets_csv: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Macod,
    Tdcod,
}

#[derive(clap::Args)]
pub struct DispatchArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    /// Also solve the joint problem and report the relative objective gap.
    #[arg(long)]
    pub compare_joint: bool,
    /// Print a JSON report instead of text.
    #[arg(long)]
    pub json: bool,
    /// Result JSON without timings: projected regions and the final schedule.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Repeat the protocol and report the median time of each step.
    #[arg(long, default_value_t = 5)]
    pub timing_runs: usize,
    #[arg(long, default_value_t = 100)]
    pub max_loops: usize,
    /// Project subsystems, and the searches within each, in parallel.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub parallel: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Polytope,
    MultiArea,
    TransmissionDistribution,
}

#[derive(clap::Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
    /// Polytope: coordination variables (1..=8).
    #[arg(long, default_value_t = 2)]
    pub nx: usize,
    /// Polytope: internal variables (0..=50).
    #[arg(long, default_value_t = 4)]
    pub ny: usize,
    /// Polytope: rows (at least nx + ny + 1, at most 1000).
    #[arg(long, default_value_t = 20)]
    pub rows: usize,
    /// Multi-area: number of areas (2..=20).
    #[arg(long, default_value_t = 2)]
    pub areas: usize,
    /// Multi-area: smallest area (1..=200 nodes).
    #[arg(long, default_value_t = 5)]
    pub min_nodes: usize,
    /// Multi-area: largest area (1..=200 nodes).
    #[arg(long, default_value_t = 20)]
    pub max_nodes: usize,
    /// Multi-area: boundary nodes per area (1..=20).
    #[arg(long, default_value_t = 3)]
    pub boundary: usize,
    /// T&D: transmission nodes (2..=200).
    #[arg(long, default_value_t = 24)]
    pub tn_nodes: usize,
    /// T&D: number of feeders (0..=200).
    #[arg(long, default_value_t = 3)]
    pub feeders: usize,
    /// T&D: nodes per feeder (2..=100).
    #[arg(long, default_value_t = 13)]
    pub feeder_nodes: usize,
}

fn configure_threads() {
    if let Some(n) = std::env::var("EPKIT_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("EPKIT_THREADS ignored: {e}");
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_threads();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Project(args) => project::run(&args),
        Command::Dispatch(args) => dispatch::run(&args).map(|()| ExitCode::SUCCESS),
        Command::Generate(args) => generate::run(&args).map(|()| ExitCode::SUCCESS),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
