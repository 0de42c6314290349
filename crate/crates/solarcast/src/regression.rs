//! Core estimators: feature standardization, ordinary least squares and
//! LASSO by cyclic coordinate descent, plus prediction and MSE.
//!
//! Both estimators fit on z-scored features with a centered target and an
//! unpenalized intercept. The LASSO objective is
//! `(1/(2n))·||y - b - Xw||^2 + alpha·||w||_1`, so `alpha` is comparable
//! across dataset sizes. Coefficients are stored in standardized space
//! (the scale on which magnitudes are comparable across mixed units);
//! original-unit forms are derivable through [`ScalingParams`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::FeatureMatrix;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("feature `{0}` is constant; cannot standardize")]
    ConstantColumn(String),
    #[error("empty input: need at least one row and one feature")]
    EmptyInput,
    #[error("alpha must be finite and non-negative, got {0}")]
    InvalidAlpha(f64),
    #[error("invalid fit options: {0}")]
    InvalidOptions(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error(
        "coordinate descent did not converge in {iters} sweeps (KKT residual {kkt_residual:e})"
    )]
    DidNotConverge { model: Box<LinearModel>, iters: usize, kkt_residual: f64 },
    #[error("feature mismatch: missing {missing:?}, unexpected {unexpected:?}{}",
            if missing.is_empty() && unexpected.is_empty() { " (same names, different order)" } else { "" })]
    FeatureMismatch { missing: Vec<String>, unexpected: Vec<String> },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("warm start has {got} coefficients, expected {expected}")]
    BadInit { got: usize, expected: usize },
}

/// Per-feature centering and scaling recorded at fit time.
///
/// `scale` holds population standard deviations; standardizing maps column
/// `j` through `(x - mean[j]) / scale[j]` and the target through
/// `y - y_mean`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingParams {
    pub mean: DVector<f64>,
    pub scale: DVector<f64>,
    pub y_mean: f64,
}

/// Convergence controls for the iterative fits.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitOptions {
    /// Stop when the largest absolute coefficient update in a sweep falls
    /// below this threshold.
    pub tol: f64,
    /// Maximum number of coordinate-descent sweeps.
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 10_000 }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<(), FitError> {
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(FitError::InvalidOptions(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(FitError::InvalidOptions("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub tol: f64,
    pub iters: usize,
    pub converged: bool,
}

/// A fitted linear model: intercept in target units (kW), coefficients in
/// standardized-feature space, and the scaling needed to apply the model
/// to raw inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    alpha: f64,
    intercept: f64,
    coefficients: DVector<f64>,
    feature_names: Vec<String>,
    scaling: ScalingParams,
    meta: FitMeta,
}

impl LinearModel {
    pub(crate) fn from_parts(
        alpha: f64,
        intercept: f64,
        coefficients: DVector<f64>,
        feature_names: Vec<String>,
        scaling: ScalingParams,
        meta: FitMeta,
    ) -> Self {
        Self { alpha, intercept, coefficients, feature_names, scaling, meta }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    /// Coefficients on the standardized scale (kW per standard deviation).
    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn scaling(&self) -> &ScalingParams {
        &self.scaling
    }

    pub fn meta(&self) -> &FitMeta {
        &self.meta
    }

    /// Coefficients mapped back to original feature units.
    pub fn raw_coefficients(&self) -> DVector<f64> {
        DVector::from_fn(self.coefficients.len(), |j, _| {
            self.coefficients[j] / self.scaling.scale[j]
        })
    }

    /// Intercept of the equivalent raw-units model
    /// `y = raw_intercept + raw_coefficients . x`.
    pub fn raw_intercept(&self) -> f64 {
        let mut b = self.intercept;
        for j in 0..self.coefficients.len() {
            b -= self.coefficients[j] * self.scaling.mean[j] / self.scaling.scale[j];
        }
        b
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&ModelJson::from(self)).expect("model serializes")
    }

    pub fn from_json_str(json: &str) -> Result<Self, serde_json::Error> {
        let bridge: ModelJson = serde_json::from_str(json)?;
        Ok(bridge.into())
    }
}

#[derive(Serialize, Deserialize)]
struct FeatureCoefJson {
    name: String,
    coef_std: f64,
    coef_raw: f64,
}

#[derive(Serialize, Deserialize)]
struct ScalingJson {
    mean: Vec<f64>,
    scale: Vec<f64>,
    y_mean: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    alpha: f64,
    intercept: f64,
    features: Vec<FeatureCoefJson>,
    scaling: ScalingJson,
    meta: FitMeta,
}

impl From<&LinearModel> for ModelJson {
    fn from(m: &LinearModel) -> Self {
        let raw = m.raw_coefficients();
        ModelJson {
            alpha: m.alpha,
            intercept: m.intercept,
            features: m
                .feature_names
                .iter()
                .enumerate()
                .map(|(j, name)| FeatureCoefJson {
                    name: name.clone(),
                    coef_std: m.coefficients[j],
                    coef_raw: raw[j],
                })
                .collect(),
            scaling: ScalingJson {
                mean: m.scaling.mean.iter().copied().collect(),
                scale: m.scaling.scale.iter().copied().collect(),
                y_mean: m.scaling.y_mean,
            },
            meta: m.meta,
        }
    }
}

impl From<ModelJson> for LinearModel {
    fn from(j: ModelJson) -> Self {
        LinearModel {
            alpha: j.alpha,
            intercept: j.intercept,
            coefficients: DVector::from_iterator(
                j.features.len(),
                j.features.iter().map(|f| f.coef_std),
            ),
            feature_names: j.features.into_iter().map(|f| f.name).collect(),
            scaling: ScalingParams {
                mean: DVector::from_vec(j.scaling.mean),
                scale: DVector::from_vec(j.scaling.scale),
                y_mean: j.scaling.y_mean,
            },
            meta: j.meta,
        }
    }
}

/// Z-score every feature column (population std) and center the target.
///
/// Returns the transformed matrix together with the parameters needed to
/// undo or re-apply the transform. Errors with [`FitError::ConstantColumn`]
/// on zero-variance features.
pub fn standardize(m: &FeatureMatrix) -> Result<(FeatureMatrix, ScalingParams), FitError> {
    let (n, p) = (m.n_rows(), m.n_features());
    if n == 0 || p == 0 {
        return Err(FitError::EmptyInput);
    }
    let nf = n as f64;
    let mut mean = DVector::zeros(p);
    let mut scale = DVector::zeros(p);
    for j in 0..p {
        let col = m.x().column(j);
        let mu = col.sum() / nf;
        let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / nf;
        let sd = var.sqrt();
        if sd <= 0.0 {
            return Err(FitError::ConstantColumn(m.feature_names()[j].clone()));
        }
        mean[j] = mu;
        scale[j] = sd;
    }
    let y_mean = m.y().sum() / nf;
    let x = DMatrix::from_fn(n, p, |i, j| (m.x()[(i, j)] - mean[j]) / scale[j]);
    let y = DVector::from_fn(n, |i, _| m.y()[i] - y_mean);
    let params = ScalingParams { mean, scale, y_mean };
    let standardized = FeatureMatrix::new(x, y, m.feature_names().to_vec())
        .map_err(|e| FitError::NumericalFailure(e.to_string()))?;
    Ok((standardized, params))
}

/// Proximal operator of `gamma·|.|`: `sign(z)·max(|z| - gamma, 0)`.
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Ordinary least squares on standardized features.
///
/// Solves via Householder QR; on rank deficiency (or when `n < p`) falls
/// back to an SVD pseudoinverse solve, which yields the minimum-norm
/// least-squares solution.
pub fn fit_ols(m: &FeatureMatrix, opts: &FitOptions) -> Result<LinearModel, FitError> {
    opts.validate()?;
    let (z, scaling) = standardize(m)?;
    let w = solve_least_squares(z.x(), z.y())?;
    Ok(LinearModel {
        alpha: 0.0,
        intercept: scaling.y_mean,
        coefficients: w,
        feature_names: m.feature_names().to_vec(),
        scaling,
        meta: FitMeta { tol: opts.tol, iters: 0, converged: true },
    })
}

pub(crate) fn solve_least_squares(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<DVector<f64>, FitError> {
    let (n, p) = x.shape();
    if n >= p {
        let qr = x.clone().qr();
        let r = qr.r();
        let dmax = (0..p).map(|j| r[(j, j)].abs()).fold(0.0_f64, f64::max);
        let dmin = (0..p).map(|j| r[(j, j)].abs()).fold(f64::INFINITY, f64::min);
        if dmax > 0.0 && dmin > 1e-10 * dmax {
            let qty = qr.q().transpose() * y;
            if let Some(w) = r.solve_upper_triangular(&qty) {
                return Ok(w);
            }
        }
    }
    // rank-deficient or underdetermined: minimum-norm solution
    let svd = x
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| FitError::NumericalFailure("SVD did not converge".into()))?;
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    let eps = smax * (n.max(p) as f64) * f64::EPSILON;
    svd.solve(y, eps).map_err(|e| FitError::NumericalFailure(e.into()))
}

/// LASSO by cyclic coordinate descent, zero-initialized.
pub fn fit_lasso(m: &FeatureMatrix, alpha: f64, opts: &FitOptions) -> Result<LinearModel, FitError> {
    let p = m.n_features();
    fit_lasso_with_init(m, alpha, opts, &DVector::zeros(p))
}

/// LASSO by cyclic coordinate descent from a warm start (standardized-space
/// coefficients, e.g. the solution at a nearby `alpha` on the same data).
///
/// Sweeps coordinates in ascending index order. Converged means the largest
/// per-sweep coefficient update fell below `opts.tol` and the KKT residual
/// of the iterate is at most `10·opts.tol`; otherwise the last iterate is
/// returned inside [`FitError::DidNotConverge`].
pub fn fit_lasso_with_init(
    m: &FeatureMatrix,
    alpha: f64,
    opts: &FitOptions,
    init: &DVector<f64>,
) -> Result<LinearModel, FitError> {
    opts.validate()?;
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(FitError::InvalidAlpha(alpha));
    }
    let (n, p) = (m.n_rows(), m.n_features());
    if n == 0 || p == 0 {
        return Err(FitError::EmptyInput);
    }
    if init.len() != p {
        return Err(FitError::BadInit { got: init.len(), expected: p });
    }
    let (z, scaling) = standardize(m)?;
    let nf = n as f64;
    let x = z.x();
    let col_sq: Vec<f64> = (0..p).map(|j| x.column(j).dot(&x.column(j)) / nf).collect();

    let mut w = init.clone();
    let mut residual = z.y().clone();
    for j in 0..p {
        if w[j] != 0.0 {
            residual.axpy(-w[j], &x.column(j).clone_owned(), 1.0);
        }
    }

    #[cfg(debug_assertions)]
    let mut prev_obj = lasso_objective(&residual, &w, alpha, nf);

    let mut converged = false;
    let mut iters = 0;
    let mut kkt = f64::INFINITY;
    for sweep in 1..=opts.max_iter {
        let mut delta_max = 0.0_f64;
        for j in 0..p {
            let old = w[j];
            let col = x.column(j);
            if old != 0.0 {
                residual.axpy(old, &col, 1.0);
            }
            let rho = col.dot(&residual) / nf;
            let new = soft_threshold(rho, alpha) / col_sq[j];
            if new != 0.0 {
                residual.axpy(-new, &col, 1.0);
            }
            w[j] = new;
            delta_max = delta_max.max((new - old).abs());
        }
        iters = sweep;

        #[cfg(debug_assertions)]
        {
            let obj = lasso_objective(&residual, &w, alpha, nf);
            debug_assert!(
                obj <= prev_obj + 1e-12 * (1.0 + prev_obj.abs()),
                "objective increased: {prev_obj} -> {obj}"
            );
            prev_obj = obj;
        }

        if delta_max < opts.tol {
            kkt = kkt_residual_standardized(x, &residual, &w, alpha, nf);
            if kkt <= 10.0 * opts.tol {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        kkt = kkt_residual_standardized(x, &residual, &w, alpha, nf);
    }

    let model = LinearModel {
        alpha,
        intercept: scaling.y_mean,
        coefficients: w,
        feature_names: m.feature_names().to_vec(),
        scaling,
        meta: FitMeta { tol: opts.tol, iters, converged },
    };
    if converged {
        Ok(model)
    } else {
        Err(FitError::DidNotConverge { model: Box::new(model), iters, kkt_residual: kkt })
    }
}

#[cfg(debug_assertions)]
fn lasso_objective(residual: &DVector<f64>, w: &DVector<f64>, alpha: f64, nf: f64) -> f64 {
    residual.dot(residual) / (2.0 * nf) + alpha * w.iter().map(|v| v.abs()).sum::<f64>()
}

/// Max violation of the LASSO stationarity conditions at `w`, given the
/// standardized design and its residual (`r = y_c - Xw`).
pub(crate) fn kkt_residual_standardized(
    x: &DMatrix<f64>,
    residual: &DVector<f64>,
    w: &DVector<f64>,
    alpha: f64,
    nf: f64,
) -> f64 {
    let mut worst = 0.0_f64;
    for j in 0..x.ncols() {
        let grad = x.column(j).dot(residual) / nf;
        let violation = if w[j] != 0.0 {
            (grad - alpha * w[j].signum()).abs()
        } else {
            (grad.abs() - alpha).max(0.0)
        };
        worst = worst.max(violation);
    }
    worst
}

pub(crate) fn kkt_residual_for(
    model: &LinearModel,
    m: &FeatureMatrix,
    alpha: f64,
) -> Result<f64, FitError> {
    check_features(model.feature_names(), m.feature_names())?;
    let (z, _) = standardize(m)?;
    let mut residual = z.y().clone();
    for j in 0..m.n_features() {
        if model.coefficients()[j] != 0.0 {
            residual.axpy(-model.coefficients()[j], &z.x().column(j).clone_owned(), 1.0);
        }
    }
    Ok(kkt_residual_standardized(z.x(), &residual, model.coefficients(), alpha, m.n_rows() as f64))
}

fn check_features(expected: &[String], got: &[String]) -> Result<(), FitError> {
    if expected == got {
        return Ok(());
    }
    let missing: Vec<String> =
        expected.iter().filter(|n| !got.contains(n)).cloned().collect();
    let unexpected: Vec<String> =
        got.iter().filter(|n| !expected.contains(n)).cloned().collect();
    Err(FitError::FeatureMismatch { missing, unexpected })
}

/// Apply a fitted model to raw (unstandardized) features.
pub fn predict(model: &LinearModel, m: &FeatureMatrix) -> Result<DVector<f64>, FitError> {
    check_features(model.feature_names(), m.feature_names())?;
    let n = m.n_rows();
    let mut out = DVector::from_element(n, model.intercept());
    for j in 0..m.n_features() {
        let wj = model.coefficients()[j];
        if wj == 0.0 {
            continue;
        }
        let mu = model.scaling().mean[j];
        let sd = model.scaling().scale[j];
        for i in 0..n {
            out[i] += wj * (m.x()[(i, j)] - mu) / sd;
        }
    }
    Ok(out)
}

/// Mean squared error between two equal-length series.
pub fn mse(pred: &[f64], actual: &[f64]) -> Result<f64, FitError> {
    if pred.len() != actual.len() {
        return Err(FitError::LengthMismatch { left: pred.len(), right: actual.len() });
    }
    if pred.is_empty() {
        return Err(FitError::EmptyInput);
    }
    let sum: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    Ok(sum / pred.len() as f64)
}
