//! Regression and feature-importance toolkit for photovoltaic power data.
//!
//! The pipeline ingests timestamped weather/meter/irradiance tables,
//! fits OLS and coordinate-descent LASSO models on standardized features,
//! selects the LASSO regularization constant by k-fold cross-validation,
//! and runs the downstream experiments: knockout feature importance,
//! top-k feature sweeps and sample-size sweeps. A synthetic generator with
//! known sparse ground truth backs the test suite and lets every command
//! run end to end without real meter data.
//!
//! Compiled with the default `parallel` feature, independent fits (CV
//! folds, knockout refits, sweep cells) run on a rayon pool; without it
//! the same code runs sequentially with identical results.

pub mod analysis;
pub mod cli;
pub mod dataio;
pub mod modelsel;
pub mod regression;
pub mod report;
pub mod synthgen;

mod par;
mod seeding;

pub use dataio::{
    CleanPolicy, ColumnKind, ColumnSchema, DataError, Dataset, FeatureMatrix, Schema, SplitSpec,
};
pub use regression::{
    fit_lasso, fit_lasso_with_init, fit_ols, mse, predict, soft_threshold, standardize, FitError,
    FitMeta, FitOptions, LinearModel, ScalingParams,
};
