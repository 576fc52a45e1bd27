//! Batch front end for the causality toolkit.
//!
//! Exit codes: 0 pass, 1 negative finding, 2 configuration or runtime error.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::Context;
use config::{Format, RunConfig};
use output::{OutputDir, DEFAULT_OUT_DIR, OUT_DIR_ENV};

pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] causality_core::Error),
    #[error("output: {0}")]
    Io(String),
}

#[derive(Debug, Parser)]
#[command(name = "causality", version, about = "Causality checks for discretized linear operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Seed for random operator kinds (overrides the config `seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Verdict tolerance factor; for `validate`, the validation tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output directory (overrides `output.directory` and $CAUSALITY_OUT_DIR).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a projection family is a resolution of the identity.
    Validate { config: PathBuf },
    /// Causality of an operator with respect to a projection family.
    Causal { config: PathBuf },
    /// Strong-causality modulus curves and the closure equivalence check.
    Modulus { config: PathBuf },
    /// The Hermite-span shift counterexample (defaults when no config is given).
    Counterexample { config: Option<PathBuf> },
}

fn out_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    cli.out_dir
        .clone()
        .or_else(|| cfg.output.directory.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::Config(format!("--tol {t} outside (0, 1)")));
        }
    }
    let path = match &cli.command {
        Command::Validate { config } | Command::Causal { config } | Command::Modulus { config } => Some(config),
        Command::Counterexample { config } => config.as_ref(),
    };
    let cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::parse("", std::path::Path::new("."))?,
    };
    let out = OutputDir::create(out_dir(cli, &cfg), cfg.wants(Format::Json), cfg.wants(Format::Csv))?;
    let ctx = Context { seed: cli.seed.or(cfg.seed).unwrap_or(0), tol: cli.tol, out };
    match &cli.command {
        Command::Validate { .. } => commands::validate(&cfg, &ctx),
        Command::Causal { .. } => commands::causal(&cfg, &ctx),
        Command::Modulus { .. } => commands::modulus(&cfg, &ctx),
        Command::Counterexample { .. } => commands::counterexample(&cfg, &ctx),
    }
}

/// Runs a parsed command line and maps errors to exit code 2.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
