//! Command-line driver: parses an experiment configuration, runs one of
//! the experiments on a sized worker pool and writes CSV/JSON results.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;

use clap::{Parser, Subcommand};

use commands::Status;
use config::{ConfigError, ExperimentConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Compute(#[from] waybound::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Parser, Debug)]
#[command(
    name = "waybound",
    version,
    about = "Distinguishability trade-offs under conservation laws"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sweep random conserving schemes and check the inequality on each
    Verify(ExperimentConfig),
    /// Evaluate the Ohira–Pearle interaction, which attains equality
    Example(ExperimentConfig),
    /// Search conserving unitaries for a chosen objective or Pareto frontier
    Optimize(ExperimentConfig),
    /// Best system fidelity at vanishing apparatus fidelity versus apparatus size
    Scaling(ExperimentConfig),
    /// Sweep with an environment sharing the conserved quantity
    Tripartite(ExperimentConfig),
}

type CommandFn = fn(&ExperimentConfig) -> Result<Status, CliError>;

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (flags, command): (ExperimentConfig, CommandFn) = match cli.command {
        Command::Verify(c) => (c, commands::cmd_verify),
        Command::Example(c) => (c, commands::cmd_example),
        Command::Optimize(c) => (c, commands::cmd_optimize),
        Command::Scaling(c) => (c, commands::cmd_scaling),
        Command::Tripartite(c) => (c, commands::cmd_tripartite),
    };
    let result = ExperimentConfig::load(flags)
        .map_err(CliError::from)
        .and_then(|cfg| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads.unwrap_or(0))
                .build()
                .map_err(|e| CliError::Config(ConfigError::new("threads", e)))?;
            pool.install(|| command(&cfg))
        });
    match result {
        Ok(Status::Ok) => EXIT_OK,
        Ok(Status::ViolationFound) => EXIT_VIOLATION,
        Err(e) => {
            eprintln!("waybound: {e}");
            EXIT_CONFIG
        }
    }
}
