//! `terrapath`: synthesize terrain, solve arrival fronts, extract optimal
//! walking paths, run start-region ensembles, cross-check against a graph
//! oracle and plot the results.

mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "terrapath", version, about = "Terrain-aware optimal walking paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured terrain as an ESRI ASCII grid.
    Synth(RunArgs),
    /// Forward solve from `a` until the front reaches `b`; writes arrival times.
    Solve(RunArgs),
    /// Solve, then trace the optimal path from `b` back to `a`.
    Path(RunArgs),
    /// Reverse solve from `b`, one path per sampled start, k-means on the paths.
    Ensemble(RunArgs),
    /// Dijkstra travel times and route, compared with the level-set result.
    Oracle(RunArgs),
    /// Render terrain, fronts and paths to SVG.
    Plot(plot::PlotArgs),
}

#[derive(Args, Clone, Debug)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set solver.cfl=0.4`. Repeatable; wins over the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory (same as `--set output.dir=...`).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(terrapath::Error),
    Io(std::io::Error),
    /// A run finished but its result is not usable (e.g. a trace that did
    /// not reach the seed disk).
    Failed(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::Failed(m) => write!(f, "{m}"),
        }
    }
}

impl From<terrapath::Error> for CliError {
    fn from(e: terrapath::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    /// 2 bad input, 3 numerical failure, 4 timeout or unreachable.
    pub fn exit_code(&self) -> u8 {
        use terrapath::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Failed(_) => 3,
            CliError::Core(e) => match e {
                E::Parse { .. }
                | E::NoData { .. }
                | E::InvalidParameter(_)
                | E::Precondition(_)
                | E::OutOfDomain { .. }
                | E::Io(_) => 2,
                E::DegenerateMomentum { .. }
                | E::BlowUp { .. }
                | E::NoInterface
                | E::SampleMismatch(..)
                | E::TooFewPaths { .. } => 3,
                E::Timeout { .. } | E::NoArrival { .. } | E::TimeOutOfRange { .. } => 4,
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::Path(a) => commands::path(&a),
        Command::Ensemble(a) => commands::ensemble(&a),
        Command::Oracle(a) => commands::oracle(&a),
        Command::Plot(a) => plot::run(&a),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("terrapath: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
