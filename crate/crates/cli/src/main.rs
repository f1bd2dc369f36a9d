//! `superlidar` command-line front end.

mod commands;
mod config;
mod exit;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use config::GridSpec;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_915;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "superlidar",
    version,
    about = "Higher-order intensity correlation ranging: correlations, Fisher information, speckle simulation and range estimation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,

    /// Random seed for simulation, campaigns and validation.
    #[arg(long, global = true, value_name = "U64", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Tabular output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// (N, m) rectangle for grid commands.
    #[arg(
        long,
        global = true,
        value_name = "N_LO..N_HI,M_LO..M_HI",
        default_value = "2..20,2..20"
    )]
    pub grid: GridSpec,

    /// Speckle frames for `simulate` (default 200000) and `validate` (default 20000).
    #[arg(long, global = true, value_name = "K")]
    pub frames: Option<usize>,

    /// Mean coincidence count per pixel pair, β.
    #[arg(long, global = true, value_name = "BETA", default_value_t = 1000.0)]
    pub budget: f64,

    /// Campaign trials.
    #[arg(long, global = true, value_name = "T", default_value_t = 200)]
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Analytic correlation curves over Δ ∈ [−2π, 2π] for the configured (N, m) pairs.
    Correlation,
    /// Reduced Fisher information over the grid, with its minimum and dynamic range.
    FisherGrid,
    /// Compare the closed-form lower bound with the integral over the grid.
    LowerBoundCheck,
    /// Fit the m-dependence per N and power laws of the coefficients in N.
    FitPipeline,
    /// Speckle correlation estimate and Poisson count map for the configured setup.
    Simulate,
    /// Maximum-likelihood object distance from a count map.
    Estimate {
        /// Binary count map; defaults to `<out>/counts.bin`.
        #[arg(long, value_name = "PATH")]
        counts: Option<PathBuf>,
    },
    /// Monte Carlo estimator variance against the Cramér–Rao bound.
    Campaign,
    /// Run the self-check suite; exit 1 on any failed check.
    Validate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Correlation => "correlation",
            Command::FisherGrid => "fisher-grid",
            Command::LowerBoundCheck => "lower-bound-check",
            Command::FitPipeline => "fit-pipeline",
            Command::Simulate => "simulate",
            Command::Estimate { .. } => "estimate",
            Command::Campaign => "campaign",
            Command::Validate => "validate",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("superlidar {}: {e}", cli.command.name());
            e.code()
        }
    }
}
