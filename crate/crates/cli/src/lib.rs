//! Command-line front end: configuration, run orchestration and artifacts.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

use std::path::PathBuf;

use clap::Parser;
use log::error;

pub use config::{parse_config, resolve, ConfigFile, Mode, Overrides, RunConfig};
pub use error::CliError;
pub use run::{resolve_workers, run, RunMetadata, RunOutcome, WORKERS_ENV};

/// Low-thrust multiple gravity-assist trajectory search.
#[derive(Debug, Clone, Parser)]
#[command(name = "mga", version)]
pub struct Cli {
    /// Run mode; overrides the config file.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Flat TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Flyby sequence such as EMJ (Mercury is Y).
    #[arg(long)]
    pub sequence: Option<String>,
    /// Master seed; every random stream derives from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; takes precedence over the environment and config.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Directory for artifacts, created if missing.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Fraction of each subtree evaluated per recursion, in (0, 1].
    #[arg(long)]
    pub q: Option<f64>,
    /// Weight on the minimum when scoring candidate flyby bodies.
    #[arg(long)]
    pub xi: Option<f64>,
    /// Weight on the minimum when scoring a sequence from its islands.
    #[arg(long)]
    pub chi: Option<f64>,
    /// CSV of orbital elements replacing the built-in planets.
    #[arg(long)]
    pub elements_file: Option<PathBuf>,
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            mode: self.mode,
            sequence: self.sequence.clone(),
            seed: self.seed,
            output_dir: self.output_dir.clone(),
            q: self.q,
            xi: self.xi,
            chi: self.chi,
            elements_file: self.elements_file.clone(),
        }
    }
}

/// Parses, resolves workers and runs. `env_workers` is the raw value of
/// [`WORKERS_ENV`], if set.
pub fn execute(cli: &Cli, env_workers: Option<&str>) -> Result<RunOutcome, CliError> {
    let (file, config) = parse_config(cli.config.as_deref(), &cli.overrides())?;
    let workers = resolve_workers(cli.workers, env_workers, file.cpu_count)?;
    run(&config, workers)
}

/// Process exit code for `cli`: 0 on success, 2 for configuration errors
/// and 3 for runtime failures.
pub fn main_with(cli: &Cli, env_workers: Option<&str>) -> i32 {
    match execute(cli, env_workers) {
        Ok(out) => {
            println!("{}", out.output_dir.display());
            0
        }
        Err(e) => {
            error!("{e}");
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
