//! `zenocool`: command-line front end for the measurement-cooling toolkit.
//!
//! Exit codes: 0 when every computation converged, 1 when any result was
//! flagged (see `diagnostics.json`), 2 for configuration, usage or I/O
//! errors.

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{Format, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] zenocool_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "zenocool",
    version,
    about = "Qubit cooling by repeated projective measurements"
)]
struct Cli {
    /// Sectioned TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override one configuration value, e.g. `--set bath.beta=4`. Repeatable;
    /// later values win.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Worker threads (overrides `output.threads`).
    #[arg(long, global = true, env = "ZENOCOOL_THREADS", value_name = "N")]
    threads: Option<usize>,
    /// Output formats (overrides `output.formats`).
    #[arg(long, global = true, value_delimiter = ',', value_name = "LIST")]
    format: Option<Vec<Format>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// The eight time-dependent rates on the time grid.
    Rates,
    /// Free and measured population dynamics with analytic envelopes.
    Evolve,
    /// The measurement factor M(τ) in its exact, approximate and smoothed forms.
    Mfactor,
    /// Cooling-domain boundaries ω1(τ), ω2(τ).
    Cooldomain,
    /// Optimal measurement interval across a parameter sweep.
    Optimize,
    /// Cooling criterion, Zeno class and sign of M at the protocol interval.
    Classify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Rates => "rates",
            Command::Evolve => "evolve",
            Command::Mfactor => "mfactor",
            Command::Cooldomain => "cooldomain",
            Command::Optimize => "optimize",
            Command::Classify => "classify",
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), &cli.set)?;
    if let Some(dir) = cli.out {
        cfg.output.dir = dir;
    }
    if let Some(f) = cli.format {
        cfg.output.formats = f;
    }
    let threads = cli.threads.unwrap_or(cfg.output.threads);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {threads} threads: {e}")))?;
    }
    let report = commands::execute(cli.command, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(report.flagged)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("zenocool: {e}");
            ExitCode::from(2)
        }
    }
}
