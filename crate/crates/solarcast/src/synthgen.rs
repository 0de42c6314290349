//! Synthetic dataset generation with known sparse ground truth, plus the
//! brute-force LASSO oracle and KKT certificate used by the test suite.
//!
//! Generated tables mimic the production schema: hourly timestamps, a
//! diurnal irradiance channel, correlated weather columns (optionally with
//! the five-day forecast block) and a PV-power target that is an exact
//! linear function of the informative columns plus Gaussian noise.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use crate::dataio::{ColumnKind, ColumnSchema, Dataset, FeatureMatrix, Schema};
use crate::regression::{
    kkt_residual_for, solve_least_squares, standardize, FitError, FitMeta, LinearModel,
};
use crate::seeding::rng_from_seed;

/// Name of the always-present instantaneous irradiance channel.
pub const IRRADIANCE_COLUMN: &str = "input1A";
/// Name of the PV-power target column.
pub const TARGET_COLUMN: &str = "pv_power";

/// Generated datasets start here and advance one hour per row.
const START_EPOCH: i64 = 1_590_969_600; // 2020-06-01T00:00:00Z
/// Constant baseline power added to every target value.
const BASE_POWER_KW: f64 = 2.5;
/// Peak of the clear-sky irradiance half-sine.
const PEAK_IRRADIANCE: f64 = 800.0;
/// Daylight window for the half-sine, hours of day.
const DAWN: i64 = 6;
const DUSK: i64 = 18;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    BadSpec(String),
    #[error("oracle supports at most 3 features, got {0}")]
    TooManyFeatures(usize),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Recipe for a synthetic dataset.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub n: usize,
    /// Informative columns with their true raw-unit coefficients.
    pub informative: Vec<(String, f64)>,
    /// Columns generated but not used by the target.
    pub nuisance: Vec<String>,
    /// Standard deviation of the additive target noise (kW).
    pub noise_std: f64,
    /// Pairwise correlation of the weather columns, in [0, 1).
    pub feature_correlation: f64,
    /// Also emit day1..day5 forecast columns (as nuisance).
    pub include_forecast_block: bool,
    pub seed: u64,
}

/// The exact linear model a synthetic target was built from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub coefficients: BTreeMap<String, f64>,
    pub intercept: f64,
    pub noise_std: f64,
}

impl SynthSpec {
    fn validate(&self) -> Result<(), SynthError> {
        if self.n == 0 {
            return Err(SynthError::BadSpec("n must be at least 1".into()));
        }
        if self.noise_std.is_nan() || self.noise_std < 0.0 {
            return Err(SynthError::BadSpec(format!(
                "noise_std must be >= 0, got {}",
                self.noise_std
            )));
        }
        if !(self.feature_correlation >= 0.0 && self.feature_correlation < 1.0) {
            return Err(SynthError::BadSpec(format!(
                "feature_correlation must lie in [0, 1), got {}",
                self.feature_correlation
            )));
        }
        for (name, _) in &self.informative {
            if self.nuisance.contains(name) {
                return Err(SynthError::BadSpec(format!(
                    "`{name}` is both informative and nuisance"
                )));
            }
        }
        for (name, _) in &self.informative {
            if name == TARGET_COLUMN {
                return Err(SynthError::BadSpec("target cannot be a feature".into()));
            }
        }
        Ok(())
    }
}

/// The 20 forecast columns: dayN{precipMM,tempMaxF,tempMinF,windspeedMiles}.
pub fn forecast_block_names() -> Vec<String> {
    let mut names = Vec::with_capacity(20);
    for day in 1..=5 {
        for suffix in ["precipMM", "tempMaxF", "tempMinF", "windspeedMiles"] {
            names.push(format!("day{day}{suffix}"));
        }
    }
    names
}

fn kind_for(name: &str) -> ColumnKind {
    if name.starts_with(IRRADIANCE_COLUMN) || name.starts_with("input1") {
        ColumnKind::Irradiance
    } else if name.starts_with("day")
        && name.as_bytes().get(3).is_some_and(|b| b.is_ascii_digit())
    {
        ColumnKind::WeatherForecast
    } else {
        ColumnKind::WeatherCurrent
    }
}

fn unit_for(name: &str) -> &'static str {
    if name.starts_with("input1") {
        "W/m²"
    } else if name.contains("precipMM") {
        "mm"
    } else if name.contains("temp") && name.ends_with('F') {
        "°F"
    } else if name.contains("windspeedMiles") {
        "mph"
    } else if name.contains("windspeedKmph") {
        "km/h"
    } else if name.contains("humidity") || name.contains("cloudcover") {
        "%"
    } else if name.contains("pressure") {
        "mb"
    } else if name.contains("visibility") {
        "km"
    } else {
        ""
    }
}

/// Plausible location and spread per column family, so standardization has
/// real work to do.
fn offset_scale_for(name: &str) -> (f64, f64) {
    if name.contains("temp") {
        (60.0, 15.0)
    } else if name.contains("humidity") {
        (60.0, 20.0)
    } else if name.contains("cloudcover") {
        (50.0, 30.0)
    } else if name.contains("precip") {
        (2.0, 1.5)
    } else if name.contains("windspeed") {
        (10.0, 4.0)
    } else if name.contains("pressure") {
        (1015.0, 8.0)
    } else if name.contains("visibility") {
        (9.0, 2.0)
    } else {
        (0.0, 1.0)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Clear-sky half-sine: zero outside the daylight window.
fn clear_sky(hour_of_day: i64) -> f64 {
    if !(DAWN..DUSK).contains(&hour_of_day) {
        return 0.0;
    }
    let t = (hour_of_day - DAWN) as f64 / (DUSK - DAWN) as f64;
    (std::f64::consts::PI * t).sin().max(0.0)
}

/// Generate a dataset and the ground truth behind its target column.
///
/// Column order: informative, nuisance, then the irradiance channel and
/// (optionally) the forecast block when not already named, then the target.
/// Fully deterministic in `spec.seed`.
pub fn generate(spec: &SynthSpec) -> Result<(Dataset, GroundTruth), SynthError> {
    spec.validate()?;

    let mut feature_names: Vec<String> =
        spec.informative.iter().map(|(n, _)| n.clone()).collect();
    feature_names.extend(spec.nuisance.iter().cloned());
    if !feature_names.iter().any(|n| n == IRRADIANCE_COLUMN) {
        feature_names.push(IRRADIANCE_COLUMN.to_string());
    }
    if spec.include_forecast_block {
        for name in forecast_block_names() {
            if !feature_names.contains(&name) {
                feature_names.push(name);
            }
        }
    }

    let mut columns = vec![ColumnSchema::new("timestamp", ColumnKind::Timestamp, "")];
    for name in &feature_names {
        columns.push(ColumnSchema::new(name.clone(), kind_for(name), unit_for(name)));
    }
    columns.push(ColumnSchema::new(TARGET_COLUMN, ColumnKind::Target, "kW"));
    let schema = Schema::new(columns).map_err(|e| SynthError::BadSpec(e.to_string()))?;

    let coef: BTreeMap<String, f64> = spec.informative.iter().cloned().collect();
    let rho = spec.feature_correlation;
    let (shared, indep) = (rho.sqrt(), (1.0 - rho).sqrt());

    let mut rng = rng_from_seed(spec.seed);
    let mut timestamps = Vec::with_capacity(spec.n);
    let mut rows = Vec::with_capacity(spec.n);
    for t in 0..spec.n {
        let epoch = START_EPOCH + (t as i64) * 3600;
        let hour_of_day = epoch.div_euclid(3600).rem_euclid(24);
        timestamps.push(epoch);

        let common: f64 = StandardNormal.sample(&mut rng);
        let attenuation = 0.55 + 0.45 * sigmoid(-common);
        let mut row = Vec::with_capacity(feature_names.len() + 1);
        let mut signal = BASE_POWER_KW;
        for name in &feature_names {
            let g: f64 = StandardNormal.sample(&mut rng);
            let value = if name == IRRADIANCE_COLUMN {
                PEAK_IRRADIANCE * clear_sky(hour_of_day) * attenuation
            } else {
                let (offset, scale) = offset_scale_for(name);
                offset + scale * (shared * common + indep * g)
            };
            if let Some(c) = coef.get(name) {
                signal += c * value;
            }
            row.push(Some(value));
        }
        let noise: f64 = StandardNormal.sample(&mut rng);
        row.push(Some(signal + spec.noise_std * noise));
        rows.push(row);
    }

    let dataset = Dataset::new(schema, timestamps, rows)
        .map_err(|e| SynthError::BadSpec(e.to_string()))?;
    let truth = GroundTruth {
        coefficients: coef,
        intercept: BASE_POWER_KW,
        noise_std: spec.noise_std,
    };
    Ok((dataset, truth))
}

/// Brute-force LASSO solver for cross-checking the coordinate-descent fit.
///
/// Minimizes the same objective by nested grid search over a coefficient
/// box bracketing the OLS solution, halving the box each round until its
/// half-width is below 1e-9. Zero is always among the candidates of each
/// coordinate, so sparse solutions are hit exactly. Independent of the
/// coordinate-descent code path on purpose; limited to `p <= 3`.
pub fn oracle_lasso(m: &FeatureMatrix, alpha: f64) -> Result<LinearModel, SynthError> {
    let p = m.n_features();
    if p > 3 {
        return Err(SynthError::TooManyFeatures(p));
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(SynthError::Fit(FitError::InvalidAlpha(alpha)));
    }
    let (z, scaling) = standardize(m)?;
    let nf = m.n_rows() as f64;

    // objective up to a constant, in Gram form:
    // f(w) = -w.c + w'Gw/2 + alpha*|w|_1, padded to three coordinates
    // (extra coordinates pinned at zero)
    let mut gram = [[0.0f64; 3]; 3];
    let mut corr = [0.0f64; 3];
    for j in 0..p {
        corr[j] = z.x().column(j).dot(z.y()) / nf;
        for (k, cell) in gram[j].iter_mut().enumerate().take(p) {
            *cell = z.x().column(j).dot(&z.x().column(k)) / nf;
        }
    }

    let w_ols = solve_least_squares(z.x(), z.y())?;
    let mut center = [0.0f64; 3];
    for j in 0..p {
        center[j] = w_ols[j];
    }
    let w_max = w_ols.iter().fold(0.0f64, |a, w| a.max(w.abs()));
    let mut half_width = 2.0 * (w_max + alpha + 1.0);

    const POINTS: usize = 17;
    while half_width > 1e-9 {
        let mut candidates: [Vec<f64>; 3] = [vec![0.0], vec![0.0], vec![0.0]];
        for (j, list) in candidates.iter_mut().enumerate().take(p) {
            list.clear();
            let lo = center[j] - half_width;
            let step = 2.0 * half_width / (POINTS - 1) as f64;
            for i in 0..POINTS {
                list.push(lo + step * i as f64);
            }
            list.push(center[j]);
            if lo <= 0.0 && center[j] + half_width >= 0.0 {
                list.push(0.0);
            }
        }
        let mut best = center;
        let mut best_f = f64::INFINITY;
        for &w0 in &candidates[0] {
            let f0 = 0.5 * gram[0][0] * w0 * w0 - corr[0] * w0 + alpha * w0.abs();
            for &w1 in &candidates[1] {
                let f1 = f0
                    + 0.5 * gram[1][1] * w1 * w1
                    - corr[1] * w1
                    + alpha * w1.abs()
                    + gram[0][1] * w0 * w1;
                let cross2 = gram[0][2] * w0 + gram[1][2] * w1;
                for &w2 in &candidates[2] {
                    let f = f1
                        + 0.5 * gram[2][2] * w2 * w2
                        - corr[2] * w2
                        + alpha * w2.abs()
                        + cross2 * w2;
                    if f < best_f {
                        best_f = f;
                        best = [w0, w1, w2];
                    }
                }
            }
        }
        center = best;
        half_width /= 2.0;
    }

    Ok(LinearModel::from_parts(
        alpha,
        scaling.y_mean,
        DVector::from_iterator(p, center.iter().copied().take(p)),
        m.feature_names().to_vec(),
        scaling,
        FitMeta { tol: 1e-9, iters: 0, converged: true },
    ))
}

/// Maximum violation of the LASSO stationarity conditions for `model` on
/// the problem defined by `(m, alpha)`: for nonzero coefficients
/// `|x_j.r/n - alpha*sign(w_j)|`, for zero coefficients
/// `max(0, |x_j.r/n| - alpha)`, with `r` the standardized-space residual.
pub fn kkt_residual(model: &LinearModel, m: &FeatureMatrix, alpha: f64) -> Result<f64, SynthError> {
    Ok(kkt_residual_for(model, m, alpha)?)
}

/// Convenience: the full LASSO objective value of a model on a matrix,
/// `(1/2n)||y_c - Zw||^2 + alpha*||w||_1` in standardized space.
pub fn lasso_objective_value(
    model: &LinearModel,
    m: &FeatureMatrix,
    alpha: f64,
) -> Result<f64, SynthError> {
    let (z, _) = standardize(m)?;
    let residual = z.y() - z.x() * model.coefficients();
    let nf = m.n_rows() as f64;
    Ok(residual.dot(&residual) / (2.0 * nf)
        + alpha * model.coefficients().iter().map(|w| w.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelsel::alpha_max;
    use crate::regression::{fit_lasso, fit_ols, FitOptions};
    use crate::seeding::rng_from_seed;
    use rand_distr::{Distribution, StandardNormal};

    fn base_spec() -> SynthSpec {
        SynthSpec {
            n: 200,
            informative: vec![("tempF".to_string(), 2.0)],
            nuisance: vec!["humidity".to_string(), "windspeedMiles".to_string()],
            noise_std: 0.0,
            feature_correlation: 0.0,
            include_forecast_block: false,
            seed: 42,
        }
    }

    #[test]
    fn generate_is_bitwise_deterministic() {
        let (a, _) = generate(&base_spec()).unwrap();
        let (b, _) = generate(&base_spec()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nighttime_irradiance_is_exactly_zero() {
        let (d, _) = generate(&base_spec()).unwrap();
        let irr = d.column(IRRADIANCE_COLUMN).unwrap();
        for (i, &epoch) in d.timestamps().iter().enumerate() {
            let hour = epoch.div_euclid(3600).rem_euclid(24);
            if !(DAWN..DUSK).contains(&hour) {
                assert_eq!(irr[i], Some(0.0), "hour {hour} not dark");
            } else if hour > DAWN {
                assert!(irr[i].unwrap() > 0.0, "hour {hour} should have sun");
            }
        }
    }

    #[test]
    fn noise_free_ols_recovers_true_coefficient() {
        let (d, truth) = generate(&base_spec()).unwrap();
        let m = d
            .to_matrix(
                &["tempF".to_string(), "humidity".to_string()],
                TARGET_COLUMN,
            )
            .unwrap();
        let model = fit_ols(&m, &FitOptions::default()).unwrap();
        let raw = model.raw_coefficients();
        assert!((raw[0] - 2.0).abs() < 1e-6, "coef {}", raw[0]);
        assert!(raw[1].abs() < 1e-6);
        assert!((model.raw_intercept() - truth.intercept).abs() < 1e-6);
    }

    #[test]
    fn generate_rejects_overlapping_name_lists() {
        let mut spec = base_spec();
        spec.nuisance.push("tempF".to_string());
        assert!(matches!(generate(&spec), Err(SynthError::BadSpec(_))));
    }

    #[test]
    fn forecast_block_adds_twenty_columns() {
        let mut spec = base_spec();
        spec.include_forecast_block = true;
        let (d, _) = generate(&spec).unwrap();
        let names: Vec<&str> =
            d.schema().columns().iter().map(|c| c.name.as_str()).collect();
        assert!(names.contains(&"day1tempMaxF"));
        assert!(names.contains(&"day5windspeedMiles"));
        // timestamp + 2 informative/nuisance + 1 nuisance + irradiance + 20 forecast + target
        assert_eq!(names.len(), 1 + 3 + 1 + 20 + 1);
    }

    fn random_instance(n: usize, p: usize, seed: u64) -> FeatureMatrix {
        let mut rng = rng_from_seed(seed);
        let x = nalgebra::DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
        let y = nalgebra::DVector::from_fn(n, |i, _| {
            let e: f64 = StandardNormal.sample(&mut rng);
            (0..p).map(|j| (j as f64 - 0.8) * x[(i, j)]).sum::<f64>() + 0.4 * e
        });
        let names = (0..p).map(|j| format!("f{}", j + 1)).collect();
        FeatureMatrix::new(x, y, names).unwrap()
    }

    #[test]
    fn oracle_matches_coordinate_descent_on_20x2() {
        let m = random_instance(20, 2, 7);
        let alpha = 0.1;
        let opts = FitOptions { tol: 1e-8, max_iter: 100_000 };
        let fit = fit_lasso(&m, alpha, &opts).unwrap();
        let oracle = oracle_lasso(&m, alpha).unwrap();
        for j in 0..2 {
            assert!(
                (fit.coefficients()[j] - oracle.coefficients()[j]).abs() < 1e-5,
                "coef {j}: {} vs {}",
                fit.coefficients()[j],
                oracle.coefficients()[j]
            );
        }
        let f_fit = lasso_objective_value(&fit, &m, alpha).unwrap();
        let f_oracle = lasso_objective_value(&oracle, &m, alpha).unwrap();
        assert!(f_oracle <= f_fit + 1e-8);
        assert!(f_fit <= f_oracle + 1e-8);
    }

    #[test]
    fn oracle_at_zero_alpha_matches_ols() {
        let m = random_instance(25, 3, 9);
        let oracle = oracle_lasso(&m, 0.0).unwrap();
        let ols = fit_ols(&m, &FitOptions::default()).unwrap();
        for j in 0..3 {
            assert!((oracle.coefficients()[j] - ols.coefficients()[j]).abs() < 1e-5);
        }
    }

    #[test]
    fn oracle_above_alpha_max_is_zero() {
        let m = random_instance(25, 3, 11);
        let amax = alpha_max(&m).unwrap();
        let oracle = oracle_lasso(&m, amax * 1.01).unwrap();
        for w in oracle.coefficients().iter() {
            assert_eq!(*w, 0.0);
        }
    }

    #[test]
    fn oracle_rejects_wide_problems() {
        let m = random_instance(25, 4, 1);
        assert!(matches!(oracle_lasso(&m, 0.1), Err(SynthError::TooManyFeatures(4))));
    }

    #[test]
    fn oracle_kkt_residual_is_small() {
        for seed in 0..10 {
            let m = random_instance(30, 3, 50 + seed);
            let amax = alpha_max(&m).unwrap();
            let alpha = 0.2 * amax;
            let oracle = oracle_lasso(&m, alpha).unwrap();
            let kkt = kkt_residual(&oracle, &m, alpha).unwrap();
            assert!(kkt <= 1e-5, "seed {seed}: kkt {kkt}");
        }
    }

    #[test]
    fn kkt_residual_of_exact_ols_at_zero_alpha() {
        let m = random_instance(30, 3, 13);
        let ols = fit_ols(&m, &FitOptions::default()).unwrap();
        let kkt = kkt_residual(&ols, &m, 0.0).unwrap();
        assert!(kkt <= 1e-10, "kkt {kkt}");
    }

    #[test]
    fn kkt_residual_of_zero_model_above_alpha_max() {
        let m = random_instance(30, 3, 15);
        let amax = alpha_max(&m).unwrap();
        let zero = fit_lasso(&m, amax * 2.0, &FitOptions::default()).unwrap();
        let kkt = kkt_residual(&zero, &m, amax * 2.0).unwrap();
        assert_eq!(kkt, 0.0);
    }

    #[test]
    fn small_alpha_support_recovery_on_uncorrelated_features() {
        for seed in 0..30 {
            let spec = SynthSpec {
                n: 300,
                informative: vec![
                    ("tempF".to_string(), 2.0),
                    ("humidity".to_string(), -1.5),
                ],
                nuisance: vec![
                    "windspeedMiles".to_string(),
                    "pressure".to_string(),
                    "visibility".to_string(),
                ],
                noise_std: 0.0,
                feature_correlation: 0.0,
                include_forecast_block: false,
                seed: 1000 + seed,
            };
            let (d, truth) = generate(&spec).unwrap();
            let features: Vec<String> = d
                .schema()
                .names_with_kind(&[ColumnKind::WeatherCurrent])
                .into_iter()
                .collect();
            let m = d.to_matrix(&features, TARGET_COLUMN).unwrap();
            let amax = alpha_max(&m).unwrap();
            let model = fit_lasso(&m, amax * 1e-4, &FitOptions::default()).unwrap();
            let mut support = crate::analysis::selected_features(&model, 1e-8);
            support.sort();
            let mut expected: Vec<String> = truth.coefficients.keys().cloned().collect();
            expected.sort();
            assert_eq!(support, expected, "seed {seed}");
        }
    }
}
