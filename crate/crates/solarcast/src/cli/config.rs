//! Run configuration: built-in defaults, overridden by a JSON config file,
//! overridden by command-line flags.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use super::CliError;

/// Which columns to regress on.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum FeatureSelection {
    /// `"all_weather"`: every current-weather, forecast and irradiance
    /// column in the schema.
    Keyword(String),
    List(Vec<String>),
}

impl FeatureSelection {
    pub fn all_weather() -> Self {
        FeatureSelection::Keyword("all_weather".to_string())
    }

    fn validate(&self) -> Result<(), CliError> {
        match self {
            FeatureSelection::Keyword(k) if k == "all_weather" => Ok(()),
            FeatureSelection::Keyword(k) => Err(CliError::Config(format!(
                "unknown feature keyword `{k}` (expected \"all_weather\" or a list)"
            ))),
            FeatureSelection::List(list) if list.is_empty() => {
                Err(CliError::Config("feature list is empty".to_string()))
            }
            FeatureSelection::List(_) => Ok(()),
        }
    }
}

/// The LASSO constant: a fixed value or `"cv"` for cross-validated choice.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum AlphaChoice {
    Value(f64),
    Keyword(String),
}

impl AlphaChoice {
    pub fn cv() -> Self {
        AlphaChoice::Keyword("cv".to_string())
    }

    pub fn is_cv(&self) -> bool {
        matches!(self, AlphaChoice::Keyword(k) if k == "cv")
    }

    fn validate(&self) -> Result<(), CliError> {
        match self {
            AlphaChoice::Value(a) if a.is_finite() && *a >= 0.0 => Ok(()),
            AlphaChoice::Value(a) => {
                Err(CliError::Config(format!("alpha must be finite and >= 0, got {a}")))
            }
            AlphaChoice::Keyword(k) if k == "cv" => Ok(()),
            AlphaChoice::Keyword(k) => {
                Err(CliError::Config(format!("alpha must be a number or \"cv\", got `{k}`")))
            }
        }
    }
}

/// Optional fields as they appear in a `--config` JSON file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    data_path: Option<PathBuf>,
    schema_path: Option<PathBuf>,
    target: Option<String>,
    features: Option<FeatureSelection>,
    train_fraction: Option<f64>,
    folds: Option<usize>,
    alpha: Option<AlphaChoice>,
    top_k: Option<usize>,
    k_max: Option<usize>,
    sizes: Option<Vec<usize>>,
    reps: Option<usize>,
    seed: Option<u64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    grid_size: Option<usize>,
    grid_eps: Option<f64>,
    bins: Option<usize>,
    smooth_window: Option<usize>,
    output_dir: Option<PathBuf>,
}

/// Shared flags for the data-driven subcommands. Flags beat the config
/// file; the config file beats built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// JSON config file with any RunConfig fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input CSV path.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Schema JSON path (list of {name, kind, unit}).
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Target column; defaults to the schema's target.
    #[arg(long)]
    pub target: Option<String>,
    /// "all_weather" or a comma-separated column list.
    #[arg(long)]
    pub features: Option<String>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// A number, or "cv" to pick by cross-validation.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Comma-separated sample sizes for sweep-n.
    #[arg(long)]
    pub sizes: Option<String>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Number of points on the cross-validation alpha grid.
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Ratio of the smallest to the largest grid alpha.
    #[arg(long)]
    pub grid_eps: Option<f64>,
    /// Measured-value bins for the report command.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Moving-average window drawn on sweep charts (1 = off).
    #[arg(long)]
    pub smooth_window: Option<usize>,
    /// Output directory.
    #[arg(long = "out")]
    pub out: Option<PathBuf>,
}

/// Fully resolved configuration used by the commands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data_path: Option<PathBuf>,
    pub schema_path: Option<PathBuf>,
    pub target: Option<String>,
    pub features: FeatureSelection,
    pub train_fraction: f64,
    pub folds: usize,
    pub alpha: AlphaChoice,
    pub top_k: usize,
    pub k_max: usize,
    pub sizes: Option<Vec<usize>>,
    pub reps: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub grid_size: usize,
    pub grid_eps: f64,
    pub bins: usize,
    pub smooth_window: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_path: None,
            schema_path: None,
            target: None,
            features: FeatureSelection::all_weather(),
            train_fraction: 0.6,
            folds: 10,
            alpha: AlphaChoice::cv(),
            top_k: 25,
            k_max: 30,
            sizes: None,
            reps: 1,
            seed: 0,
            tol: 1e-6,
            max_iter: 10_000,
            grid_size: 100,
            grid_eps: 1e-3,
            bins: 20,
            smooth_window: 3,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn parse_features_flag(raw: &str) -> FeatureSelection {
    if raw == "all_weather" {
        FeatureSelection::all_weather()
    } else {
        FeatureSelection::List(
            raw.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        )
    }
}

fn parse_alpha_flag(raw: &str) -> Result<AlphaChoice, CliError> {
    if raw == "cv" {
        return Ok(AlphaChoice::cv());
    }
    raw.parse::<f64>()
        .map(AlphaChoice::Value)
        .map_err(|_| CliError::Config(format!("alpha must be a number or \"cv\", got `{raw}`")))
}

fn parse_sizes_flag(raw: &str) -> Result<Vec<usize>, CliError> {
    raw.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| CliError::Config(format!("bad size `{s}` in --sizes")))
        })
        .collect()
}

impl RunConfig {
    pub fn resolve(args: &DataArgs) -> Result<Self, CliError> {
        let file: ConfigFile = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", path.display()))
                })?;
                serde_json::from_str(&text).map_err(|e| {
                    CliError::Config(format!("bad config {}: {e}", path.display()))
                })?
            }
            None => ConfigFile::default(),
        };
        let defaults = RunConfig::default();
        let cfg = RunConfig {
            data_path: args.data.clone().or(file.data_path),
            schema_path: args.schema.clone().or(file.schema_path),
            target: args.target.clone().or(file.target),
            features: match &args.features {
                Some(raw) => parse_features_flag(raw),
                None => file.features.unwrap_or(defaults.features),
            },
            train_fraction: args
                .train_fraction
                .or(file.train_fraction)
                .unwrap_or(defaults.train_fraction),
            folds: args.folds.or(file.folds).unwrap_or(defaults.folds),
            alpha: match &args.alpha {
                Some(raw) => parse_alpha_flag(raw)?,
                None => file.alpha.unwrap_or(defaults.alpha),
            },
            top_k: args.top_k.or(file.top_k).unwrap_or(defaults.top_k),
            k_max: args.k_max.or(file.k_max).unwrap_or(defaults.k_max),
            sizes: match &args.sizes {
                Some(raw) => Some(parse_sizes_flag(raw)?),
                None => file.sizes,
            },
            reps: args.reps.or(file.reps).unwrap_or(defaults.reps),
            seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
            tol: args.tol.or(file.tol).unwrap_or(defaults.tol),
            max_iter: args.max_iter.or(file.max_iter).unwrap_or(defaults.max_iter),
            grid_size: args.grid_size.or(file.grid_size).unwrap_or(defaults.grid_size),
            grid_eps: args.grid_eps.or(file.grid_eps).unwrap_or(defaults.grid_eps),
            bins: args.bins.or(file.bins).unwrap_or(defaults.bins),
            smooth_window: args
                .smooth_window
                .or(file.smooth_window)
                .unwrap_or(defaults.smooth_window),
            output_dir: args.out.clone().or(file.output_dir).unwrap_or(defaults.output_dir),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.features.validate()?;
        self.alpha.validate()?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(CliError::Config(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.folds < 2 {
            return Err(CliError::Config(format!("folds must be >= 2, got {}", self.folds)));
        }
        for (name, value) in [
            ("top_k", self.top_k),
            ("k_max", self.k_max),
            ("reps", self.reps),
            ("max_iter", self.max_iter),
            ("bins", self.bins),
            ("smooth_window", self.smooth_window),
        ] {
            if value == 0 {
                return Err(CliError::Config(format!("{name} must be >= 1")));
            }
        }
        if self.grid_size < 2 {
            return Err(CliError::Config(format!(
                "grid_size must be >= 2, got {}",
                self.grid_size
            )));
        }
        if !(self.grid_eps > 0.0 && self.grid_eps < 1.0) {
            return Err(CliError::Config(format!(
                "grid_eps must lie in (0, 1), got {}",
                self.grid_eps
            )));
        }
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(CliError::Config(format!("tol must be > 0, got {}", self.tol)));
        }
        if let Some(sizes) = &self.sizes {
            if sizes.is_empty() {
                return Err(CliError::Config("sizes must not be empty".to_string()));
            }
            if sizes.iter().any(|&s| s < 2) {
                return Err(CliError::Config("every size must be >= 2".to_string()));
            }
        }
        Ok(())
    }
}
