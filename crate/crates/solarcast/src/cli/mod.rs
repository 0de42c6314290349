//! Command-line surface: `solarcast <fit|cv|knockout|sweep-k|sweep-n|report|synth>`.
//!
//! Every command is a batch run: it reads a config (flags beat config file,
//! config file beats defaults), computes, and writes CSV/JSON/SVG artifacts
//! atomically into the output directory. Reruns with the same config and
//! seed produce byte-identical files. Exit codes: 2 for config errors, 3
//! for data errors, 4 for numerical errors.

mod commands;
mod config;

pub use config::{AlphaChoice, DataArgs, FeatureSelection, RunConfig};

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::dataio::DataError;
use crate::modelsel::CvError;
use crate::regression::FitError;
use crate::synthgen::SynthError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<CvError> for CliError {
    fn from(e: CvError) -> Self {
        match e {
            CvError::BadFoldCount { .. } | CvError::BadGrid(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Data(inner) => CliError::Data(inner.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::BadSpec(m) => CliError::Config(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "solarcast",
    version,
    about = "Regression and feature-importance toolkit for photovoltaic power data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit OLS and LASSO models; write models and train/test/whole MSEs.
    Fit(DataArgs),
    /// Cross-validate the LASSO constant over an alpha grid.
    Cv(DataArgs),
    /// Leave-one-out importance over the top-k ranked features.
    Knockout(DataArgs),
    /// Test MSE of refits on the top k = 1..k_max ranked features.
    #[command(name = "sweep-k")]
    SweepK(DataArgs),
    /// Test MSE over random subsamples of increasing size.
    #[command(name = "sweep-n")]
    SweepN(DataArgs),
    /// Predicted-vs-measured table and chart, in watts, binned by measured value.
    Report(DataArgs),
    /// Generate a synthetic dataset with known ground truth.
    Synth(SynthArgs),
}

/// Flags mirroring the synthetic-generator spec.
#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Number of hourly rows.
    #[arg(long, default_value_t = 6000)]
    pub n: usize,
    /// Informative columns as name=coefficient pairs, comma separated.
    #[arg(long, default_value = "input1A=0.008,tempF=0.05,humidity=-0.02")]
    pub informative: String,
    /// Nuisance columns, comma separated.
    #[arg(
        long,
        default_value = "cloudcover,precipMM,pressure,visibility,windspeedMiles,windspeedKmph,winddirDegree"
    )]
    pub nuisance: String,
    /// Target noise standard deviation (kW).
    #[arg(long, default_value_t = 0.8)]
    pub noise_std: f64,
    /// Pairwise weather-column correlation in [0, 1).
    #[arg(long, default_value_t = 0.3)]
    pub feature_correlation: f64,
    /// Emit the day1..day5 forecast columns (--forecast-block false to skip).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub forecast_block: bool,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Output directory.
    #[arg(long = "out", default_value = "out")]
    pub out: PathBuf,
}

/// Run a parsed command to completion.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit(args) => commands::cmd_fit(&RunConfig::resolve(&args)?),
        Command::Cv(args) => commands::cmd_cv(&RunConfig::resolve(&args)?),
        Command::Knockout(args) => commands::cmd_knockout(&RunConfig::resolve(&args)?),
        Command::SweepK(args) => commands::cmd_sweep_k(&RunConfig::resolve(&args)?),
        Command::SweepN(args) => commands::cmd_sweep_n(&RunConfig::resolve(&args)?),
        Command::Report(args) => commands::cmd_report(&RunConfig::resolve(&args)?),
        Command::Synth(args) => commands::cmd_synth(&args),
    }
}
