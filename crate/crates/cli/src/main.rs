mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, Preset, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: elasto::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn core(context: impl Into<String>) -> impl FnOnce(elasto::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Core { context, source }
    }
}

/// Regularized ultrasound speckle tracking and elastography tools.
#[derive(Debug, Parser)]
#[command(name = "elasto", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Tracking method: soul, l1_soul, mechsoul, l1_mechsoul, ncc or dp.
    #[arg(long, global = true)]
    method: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Phantom seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Parameter preset.
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a pre/post frame pair with exact ground truth.
    Simulate,
    /// Estimate displacement, strain and EPR from a frame pair.
    Track {
        pre: Option<PathBuf>,
        post: Option<PathBuf>,
    },
    /// Compute strain and EPR from a displacement file.
    Strain { field: Option<PathBuf> },
    /// Accuracy and SNR/CNR window statistics for a field file.
    Metrics {
        estimate: Option<PathBuf>,
        /// Ground-truth file of the same kind.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Write PGM/PPM images of every component of a field file.
    Render { field: Option<PathBuf> },
}

/// Outcome of a subcommand that ran to completion.
pub enum Outcome {
    Done,
    NotConverged,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("ELASTO_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("ELASTO_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    configure_threads()?;
    let overrides = Overrides {
        preset: cli.preset,
        method: cli.method,
        seed: cli.seed,
        out: cli.out,
    };
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Simulate => commands::simulate(&cfg),
        Command::Track { pre, post } => commands::track(&cfg, pre, post),
        Command::Strain { field } => commands::strain(&cfg, field),
        Command::Metrics { estimate, truth } => commands::metrics(&cfg, estimate, truth),
        Command::Render { field } => commands::render(&cfg, field),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => {
            eprintln!("elasto: tracking did not converge; results written");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("elasto: {e}");
            ExitCode::from(1)
        }
    }
}
