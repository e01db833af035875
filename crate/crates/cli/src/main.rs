//! `ricci-lab`: flow runs, constant chains, estimate checks and parameter
//! sweeps driven by a TOML config.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod check;
mod config;
mod constants;
mod error;
mod flow;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Format;
use error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "ricci-lab", version, about = "Ricci flow laboratory on homogeneous model geometries")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; defaults to [output].dir, then $RICCI_LAB_OUT, then ./runs.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for randomized checks and sampling; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override a config entry, e.g. `flow.gamma=2` (repeatable).
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the flow and write the trajectory with a metadata sidecar.
    Flow,
    /// Run the estimate checks on a recorded trajectory.
    Check {
        /// Trajectory CSV written by `flow`.
        #[arg(long)]
        trajectory: PathBuf,
        /// Comma-separated check names; all when omitted.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
    },
    /// Evaluate the constant chain and the Moser schedule.
    Constants,
    /// Static invariants and hypothesis margins over a parameter grid.
    Sweep,
}

impl Global {
    pub fn load(&self) -> CliResult<config::Loaded> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| error::CliError::Config("--config is required".into()))?;
        config::load(path, &self.overrides, self.seed)
    }
}

fn run(cli: &Cli) -> CliResult<i32> {
    match &cli.command {
        Command::Flow => flow::run(&cli.global),
        Command::Check { trajectory, checks } => check::run(&cli.global, trajectory, checks),
        Command::Constants => constants::run(&cli.global),
        Command::Sweep => sweep::run(&cli.global),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
