//! Model selection: k-fold assignments, regularization grids and
//! cross-validated choice of the LASSO constant.
//!
//! Standardization is recomputed inside every fold on its training rows
//! only, so held-out rows never leak into the scaling. Per-fold work is
//! independent and runs through the crate's parallel map; the warm-started
//! path walks each fold's grid sequentially (largest alpha first), which
//! is what makes warm starts well defined.

use nalgebra::DVector;
use thiserror::Error;

use crate::dataio::FeatureMatrix;
use crate::par::try_map_indices;
use crate::regression::{
    fit_lasso_with_init, mse, predict, standardize, FitError, FitOptions,
};
use crate::seeding::shuffled_indices;

#[derive(Debug, Error)]
pub enum CvError {
    #[error("fold count must satisfy 2 <= k <= n, got k={k}, n={n}")]
    BadFoldCount { k: usize, n: usize },
    #[error("fold assignment covers {folds_n} rows but the matrix has {matrix_n}")]
    FoldSizeMismatch { folds_n: usize, matrix_n: usize },
    #[error("target has zero variance; alpha grid is undefined")]
    ConstantTarget,
    #[error("invalid alpha grid: {0}")]
    BadGrid(String),
    #[error("fold {fold}: {source}")]
    FoldFit { fold: usize, source: FitError },
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Assignment of `n` rows to `k` cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    n: usize,
    k: usize,
    assignment: Vec<usize>,
}

impl FoldAssignment {
    /// Build directly from a fold-id vector. Every id must be in `[0, k)`
    /// and every fold non-empty with sizes differing by at most one.
    pub fn new(k: usize, assignment: Vec<usize>) -> Result<Self, CvError> {
        let n = assignment.len();
        if k < 2 || k > n {
            return Err(CvError::BadFoldCount { k, n });
        }
        let mut sizes = vec![0usize; k];
        for &f in &assignment {
            if f >= k {
                return Err(CvError::BadGrid(format!("fold id {f} out of range 0..{k}")));
            }
            sizes[f] += 1;
        }
        let (min, max) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        if *min == 0 || max - min > 1 {
            return Err(CvError::BadFoldCount { k, n });
        }
        Ok(Self { n, k, assignment })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Row indices held out by fold `f`, ascending.
    pub fn test_rows(&self, f: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.assignment[i] == f).collect()
    }

    /// Row indices used for training when fold `f` is held out, ascending.
    pub fn train_rows(&self, f: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.assignment[i] != f).collect()
    }
}

/// Seeded shuffle of `0..n` dealt into `k` near-equal folds.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<FoldAssignment, CvError> {
    if k < 2 || k > n {
        return Err(CvError::BadFoldCount { k, n });
    }
    let order = shuffled_indices(n, seed);
    let base = n / k;
    let extra = n % k; // the first `extra` folds get one more row
    let mut assignment = vec![0usize; n];
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &row in &order[pos..pos + size] {
            assignment[row] = fold;
        }
        pos += size;
    }
    Ok(FoldAssignment { n, k, assignment })
}

/// One cross-validation row: an alpha with its mean and per-fold MSEs.
#[derive(Debug, Clone, PartialEq)]
pub struct CvRow {
    pub alpha: f64,
    pub cv_mse: f64,
    pub fold_mses: Vec<f64>,
}

/// Cross-validation results over a decreasing alpha grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CvTable {
    rows: Vec<CvRow>,
}

impl CvTable {
    pub fn rows(&self) -> &[CvRow] {
        &self.rows
    }

    /// CSV form with header `alpha,cv_mse,fold_0,...,fold_{k-1}`.
    pub fn to_csv_string(&self) -> String {
        let k = self.rows.first().map_or(0, |r| r.fold_mses.len());
        let mut out = String::from("alpha,cv_mse");
        for f in 0..k {
            out.push_str(&format!(",fold_{f}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.alpha.to_string());
            out.push(',');
            out.push_str(&row.cv_mse.to_string());
            for v in &row.fold_mses {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Largest alpha at which the LASSO solution is all-zero:
/// `max_j |x_j . (y - mean(y))| / n` over standardized columns.
pub fn alpha_max(m: &FeatureMatrix) -> Result<f64, CvError> {
    let nf = m.n_rows() as f64;
    let y_mean = m.y().sum() / nf;
    let y_var = m.y().iter().map(|v| (v - y_mean) * (v - y_mean)).sum::<f64>() / nf;
    if y_var <= 0.0 {
        return Err(CvError::ConstantTarget);
    }
    let (z, _) = standardize(m)?;
    let max = (0..m.n_features())
        .map(|j| (z.x().column(j).dot(z.y()) / nf).abs())
        .fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return Err(CvError::BadGrid("all features uncorrelated with target".into()));
    }
    Ok(max)
}

/// Geometric grid of `m` values from `alpha_max` down to `eps * alpha_max`,
/// strictly decreasing.
pub fn alpha_grid(matrix: &FeatureMatrix, m: usize, eps: f64) -> Result<Vec<f64>, CvError> {
    if m < 2 {
        return Err(CvError::BadGrid(format!("need at least 2 grid points, got {m}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CvError::BadGrid(format!("eps must lie in (0, 1), got {eps}")));
    }
    let top = alpha_max(matrix)?;
    let grid: Vec<f64> =
        (0..m).map(|i| top * eps.powf(i as f64 / (m - 1) as f64)).collect();
    Ok(grid)
}

fn check_grid(grid: &[f64]) -> Result<(), CvError> {
    if grid.is_empty() {
        return Err(CvError::BadGrid("empty grid".into()));
    }
    if grid.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(CvError::BadGrid("grid values must be finite and non-negative".into()));
    }
    for pair in grid.windows(2) {
        if pair[1] >= pair[0] {
            return Err(CvError::BadGrid("grid must be strictly decreasing".into()));
        }
    }
    Ok(())
}

struct FoldData {
    train: FeatureMatrix,
    test: FeatureMatrix,
}

fn fold_data(m: &FeatureMatrix, folds: &FoldAssignment, f: usize) -> FoldData {
    FoldData {
        train: m.select_rows(&folds.train_rows(f)),
        test: m.select_rows(&folds.test_rows(f)),
    }
}

fn fold_test_mse(data: &FoldData, alpha: f64, opts: &FitOptions, init: &DVector<f64>) -> Result<(f64, DVector<f64>), FitError> {
    let model = fit_lasso_with_init(&data.train, alpha, opts, init)?;
    let pred = predict(&model, &data.test)?;
    let fold_mse = mse(pred.as_slice(), data.test.y().as_slice())?;
    Ok((fold_mse, model.coefficients().clone()))
}

/// Cross-validated MSE of the LASSO at one alpha: fit on each fold's
/// training rows (cold start), score on its held-out rows, average.
pub fn cv_mse(
    m: &FeatureMatrix,
    alpha: f64,
    folds: &FoldAssignment,
    opts: &FitOptions,
) -> Result<(f64, Vec<f64>), CvError> {
    if folds.n() != m.n_rows() {
        return Err(CvError::FoldSizeMismatch { folds_n: folds.n(), matrix_n: m.n_rows() });
    }
    let zeros = DVector::zeros(m.n_features());
    let fold_mses = try_map_indices(folds.k(), |f| {
        let data = fold_data(m, folds, f);
        fold_test_mse(&data, alpha, opts, &zeros)
            .map(|(fold_mse, _)| fold_mse)
            .map_err(|source| CvError::FoldFit { fold: f, source })
    })?;
    Ok((mean(&fold_mses), fold_mses))
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Walk a decreasing alpha grid with warm starts and pick the alpha with
/// the smallest cross-validated MSE; ties (within 1e-15) go to the larger
/// alpha, i.e. the sparser model.
pub fn select_alpha(
    m: &FeatureMatrix,
    folds: &FoldAssignment,
    grid: &[f64],
    opts: &FitOptions,
) -> Result<(f64, CvTable), CvError> {
    if folds.n() != m.n_rows() {
        return Err(CvError::FoldSizeMismatch { folds_n: folds.n(), matrix_n: m.n_rows() });
    }
    check_grid(grid)?;

    // Each fold walks the full path sequentially (warm starts), folds in
    // parallel; aggregation below is in fixed fold order either way.
    let per_fold: Vec<Vec<f64>> = try_map_indices(folds.k(), |f| {
        let data = fold_data(m, folds, f);
        let mut init = DVector::zeros(m.n_features());
        let mut mses = Vec::with_capacity(grid.len());
        for &alpha in grid {
            let (fold_mse, coefs) = fold_test_mse(&data, alpha, opts, &init)
                .map_err(|source| CvError::FoldFit { fold: f, source })?;
            init = coefs;
            mses.push(fold_mse);
        }
        Ok::<_, CvError>(mses)
    })?;

    let rows: Vec<CvRow> = grid
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let fold_mses: Vec<f64> = (0..folds.k()).map(|f| per_fold[f][i]).collect();
            CvRow { alpha, cv_mse: mean(&fold_mses), fold_mses }
        })
        .collect();

    let mut best = 0usize;
    for (i, row) in rows.iter().enumerate().skip(1) {
        if row.cv_mse < rows[best].cv_mse - 1e-15 {
            best = i;
        }
    }
    Ok((rows[best].alpha, CvTable { rows }))
}
