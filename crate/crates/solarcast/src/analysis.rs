//! The downstream experiments: feature selection from fitted models,
//! ranking by coefficient magnitude, leave-one-out knockout importance,
//! top-k feature sweeps and sample-size sweeps.
//!
//! Knockout refits and sweep cells are independent OLS problems and run
//! through the crate's parallel map; reports come back in a fixed order
//! regardless of scheduling.

use thiserror::Error;

use crate::dataio::{DataError, Dataset, FeatureMatrix, SplitSpec};
use crate::par::try_map_indices;
use crate::regression::{fit_ols, mse, predict, FitError, FitOptions, LinearModel};
use crate::seeding::derive_seed;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("knockout of `{feature}`: {source}")]
    KnockoutFit { feature: String, source: FitError },
    #[error("sweep cell {label}: {source}")]
    SweepFit { label: String, source: FitError },
    #[error("ranking feature `{0}` not present in the matrix")]
    UnknownRankedFeature(String),
    #[error("k_max {k_max} exceeds ranking length {len}")]
    KMaxTooLarge { k_max: usize, len: usize },
    #[error("k_max must be at least 1")]
    EmptyRange,
    #[error("reps must be at least 1")]
    NoReps,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Names of features whose standardized coefficient magnitude exceeds
/// `tol`, in the model's column order.
pub fn selected_features(model: &LinearModel, tol: f64) -> Vec<String> {
    model
        .feature_names()
        .iter()
        .zip(model.coefficients().iter())
        .filter(|(_, &w)| w.abs() > tol)
        .map(|(name, _)| name.clone())
        .collect()
}

/// Top `min(k, p)` feature names by standardized coefficient magnitude,
/// descending; exact ties break toward the lexicographically smaller name.
pub fn rank_by_abs_coef(model: &LinearModel, k: usize) -> Vec<String> {
    let mut order: Vec<usize> = (0..model.feature_names().len()).collect();
    order.sort_by(|&a, &b| {
        let (wa, wb) = (model.coefficients()[a].abs(), model.coefficients()[b].abs());
        wb.total_cmp(&wa)
            .then_with(|| model.feature_names()[a].cmp(&model.feature_names()[b]))
    });
    order
        .into_iter()
        .take(k)
        .map(|j| model.feature_names()[j].clone())
        .collect()
}

/// One knockout row: the ranked feature, the test MSE of the refit without
/// it, and the change against the all-features baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct KnockoutRow {
    pub rank: usize,
    pub feature: String,
    pub mse_without: f64,
    pub delta: f64,
    pub important: bool,
}

/// Leave-one-out importance table over a feature ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct KnockoutReport {
    pub baseline_mse: f64,
    pub rows: Vec<KnockoutRow>,
}

impl KnockoutReport {
    /// CSV form with header `rank,feature,mse_without,delta,important`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("rank,feature,mse_without,delta,important\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.rank, row.feature, row.mse_without, row.delta, row.important
            ));
        }
        out
    }

    pub fn to_json_string(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                serde_json::json!({
                    "rank": r.rank,
                    "feature": r.feature,
                    "mse_without": r.mse_without,
                    "delta": r.delta,
                    "important": r.important,
                })
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "baseline_mse": self.baseline_mse,
            "features": self.rows.iter().map(|r| r.feature.clone()).collect::<Vec<_>>(),
            "rows": rows,
        }))
        .expect("report serializes")
    }
}

fn ols_test_mse(
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    features: &[String],
    opts: &FitOptions,
) -> Result<f64, FitError> {
    let train_sel = train.select_features(features).map_err(|e| match e {
        DataError::UnknownFeature(n) => FitError::FeatureMismatch {
            missing: vec![n],
            unexpected: vec![],
        },
        other => FitError::NumericalFailure(other.to_string()),
    })?;
    let test_sel = test
        .select_features(features)
        .map_err(|e| FitError::NumericalFailure(e.to_string()))?;
    let model = fit_ols(&train_sel, opts)?;
    let pred = predict(&model, &test_sel)?;
    mse(pred.as_slice(), test_sel.y().as_slice())
}

/// Refit OLS once per ranked feature with that feature left out and report
/// the test-MSE change against the all-features baseline. A positive delta
/// marks the feature as important.
pub fn knockout(
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    ranking: &[String],
    opts: &FitOptions,
) -> Result<KnockoutReport, AnalysisError> {
    for name in ranking {
        if !train.feature_names().contains(name) || !test.feature_names().contains(name) {
            return Err(AnalysisError::UnknownRankedFeature(name.clone()));
        }
    }
    let baseline_mse = ols_test_mse(train, test, ranking, opts)
        .map_err(|source| AnalysisError::KnockoutFit { feature: "<baseline>".into(), source })?;

    let rows = try_map_indices(ranking.len(), |i| {
        let without: Vec<String> = ranking
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, name)| name.clone())
            .collect();
        let mse_without = ols_test_mse(train, test, &without, opts)
            .map_err(|source| AnalysisError::KnockoutFit { feature: ranking[i].clone(), source })?;
        let delta = mse_without - baseline_mse;
        Ok::<_, AnalysisError>(KnockoutRow {
            rank: i + 1,
            feature: ranking[i].clone(),
            mse_without,
            delta,
            important: delta > 0.0,
        })
    })?;
    Ok(KnockoutReport { baseline_mse, rows })
}

/// One sweep point: MSE statistics at a given x (feature count or sample
/// size), aggregated over `reps` repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub x: usize,
    pub mse_mean: f64,
    pub mse_std: f64,
    pub reps: usize,
}

/// A series of sweep points with strictly increasing x.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// CSV form with header `x,mse_mean,mse_std,reps`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("x,mse_mean,mse_std,reps\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{},{}\n", p.x, p.mse_mean, p.mse_std, p.reps));
        }
        out
    }
}

/// Top-k sweep output: the MSE series plus the exact feature prefix used
/// at each k, for reporting and for checking the nesting property.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKSweep {
    pub sweep: SweepResult,
    pub feature_sets: Vec<Vec<String>>,
}

/// Test MSE of OLS refit on the top-k prefix of `ranking`, k = 1..=k_max.
pub fn sweep_top_k(
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    ranking: &[String],
    k_max: usize,
    opts: &FitOptions,
) -> Result<TopKSweep, AnalysisError> {
    if k_max == 0 {
        return Err(AnalysisError::EmptyRange);
    }
    if k_max > ranking.len() {
        return Err(AnalysisError::KMaxTooLarge { k_max, len: ranking.len() });
    }
    let cells = try_map_indices(k_max, |i| {
        let k = i + 1;
        let prefix: Vec<String> = ranking[..k].to_vec();
        let test_mse = ols_test_mse(train, test, &prefix, opts)
            .map_err(|source| AnalysisError::SweepFit { label: format!("k={k}"), source })?;
        Ok::<_, AnalysisError>((SweepPoint { x: k, mse_mean: test_mse, mse_std: 0.0, reps: 1 }, prefix))
    })?;
    let (points, feature_sets) = cells.into_iter().unzip();
    Ok(TopKSweep { sweep: SweepResult { points }, feature_sets })
}

/// For each sample size, repeatedly draw a random subset of the dataset,
/// split it, fit OLS and record the test MSE; report mean and (population)
/// std over repetitions. Per-cell seeds are derived from
/// `(seed, size, rep)` so points are independent yet reproducible.
#[allow(clippy::too_many_arguments)]
pub fn sweep_sample_size(
    d: &Dataset,
    features: &[String],
    target: &str,
    sizes: &[usize],
    reps: usize,
    seed: u64,
    eval_spec: &SplitSpec,
    opts: &FitOptions,
) -> Result<SweepResult, AnalysisError> {
    if reps == 0 {
        return Err(AnalysisError::NoReps);
    }
    if sizes.is_empty() {
        return Err(AnalysisError::EmptyRange);
    }
    for &m in sizes {
        if m > d.n_rows() {
            return Err(DataError::SampleTooLarge { m, n: d.n_rows() }.into());
        }
    }
    let cells = try_map_indices(sizes.len() * reps, |cell| {
        let (si, rep) = (cell / reps, cell % reps);
        let size = sizes[si];
        let cell_seed = derive_seed(seed, size as u64, rep as u64);
        let sampled = d.sample(size, cell_seed)?;
        let (train_ds, test_ds) = sampled.split(eval_spec)?;
        let train = train_ds.to_matrix(features, target)?;
        let test = test_ds.to_matrix(features, target)?;
        ols_test_mse(&train, &test, features, opts).map_err(|source| {
            AnalysisError::SweepFit { label: format!("size={size} rep={rep}"), source }
        })
    })?;
    let points = sizes
        .iter()
        .enumerate()
        .map(|(si, &size)| {
            let slice = &cells[si * reps..(si + 1) * reps];
            let mean = slice.iter().sum::<f64>() / reps as f64;
            let var =
                slice.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / reps as f64;
            SweepPoint { x: size, mse_mean: mean, mse_std: var.sqrt(), reps }
        })
        .collect();
    Ok(SweepResult { points })
}
