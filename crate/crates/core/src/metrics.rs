//! Prediction, coefficient and stability metrics, plus correlation
//! diagnostics.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, WeightVector};
use crate::error::{check_len, Error, Result};

/// Root mean squared error.
pub fn rmse(y_true: &DVector<f64>, y_pred: &DVector<f64>) -> Result<f64> {
    check_len("prediction length", y_true.len(), y_pred.len())?;
    if y_true.is_empty() {
        return Err(Error::InvalidInput("rmse of an empty vector".into()));
    }
    Ok(((y_true - y_pred).norm_squared() / y_true.len() as f64).sqrt())
}

/// `sum_{j in cols} |beta_hat_j - beta_true_j|`.
pub fn beta_error(beta_hat: &[f64], beta_true: &[f64], cols: &[usize]) -> Result<f64> {
    check_len("coefficient length", beta_true.len(), beta_hat.len())?;
    if let Some(c) = cols.iter().find(|&&c| c >= beta_true.len()) {
        return Err(Error::InvalidInput(format!("column {c} out of range")));
    }
    Ok(cols.iter().map(|&c| (beta_hat[c] - beta_true[c]).abs()).sum())
}

/// Mean and sample standard deviation of per-environment errors.
pub fn stability_metrics(per_env_rmse: &[f64]) -> Result<(f64, f64)> {
    let k = per_env_rmse.len();
    if k < 2 {
        return Err(Error::InsufficientEnvironments(k));
    }
    // offsets from the first value keep equal inputs exactly at zero spread
    let base = per_env_rmse[0];
    let shift = per_env_rmse.iter().map(|e| e - base).sum::<f64>() / k as f64;
    let ss: f64 = per_env_rmse.iter().map(|e| (e - base - shift).powi(2)).sum();
    Ok((base + shift, (ss / (k as f64 - 1.0)).sqrt()))
}

/// Pearson correlation matrix of the columns of `x`, optionally under the
/// probability weights `w / sum(w)`.
pub fn pearson_matrix(x: &DMatrix<f64>, w: Option<&WeightVector>) -> Result<DMatrix<f64>> {
    let (n, p) = x.shape();
    let probs = match w {
        Some(w) => {
            check_len("weight length", n, w.len())?;
            let total = w.sum();
            if !(total > 0.0) {
                return Err(Error::InvalidInput("weights sum to zero".into()));
            }
            w.as_vector() / total
        }
        None => DVector::from_element(n, 1.0 / n as f64),
    };
    let means = x.tr_mul(&probs);
    let mut centered = x.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    let mut scaled = centered.clone();
    for mut col in scaled.column_iter_mut() {
        col.component_mul_assign(&probs);
    }
    let cov = scaled.tr_mul(&centered);
    let sd: Vec<f64> = (0..p).map(|j| cov[(j, j)].sqrt()).collect();
    if let Some(column) = sd.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::DegenerateColumn { column });
    }
    Ok(DMatrix::from_fn(p, p, |j, k| {
        if j == k {
            1.0
        } else {
            let (a, b) = if j < k { (j, k) } else { (k, j) };
            (cov[(a, b)] / (sd[a] * sd[b])).clamp(-1.0, 1.0)
        }
    }))
}

/// Largest absolute off-diagonal entry of a square matrix.
pub fn max_off_diagonal(m: &DMatrix<f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.nrows() {
        for k in 0..m.ncols() {
            if j != k {
                best = best.max(m[(j, k)].abs());
            }
        }
    }
    best
}

/// l1 distance between the column-mean vectors of two samples.
pub fn distribution_distance(x_i: &DMatrix<f64>, x_j: &DMatrix<f64>) -> Result<f64> {
    check_len("column count", x_i.ncols(), x_j.ncols())?;
    if x_i.nrows() == 0 || x_j.nrows() == 0 {
        return Err(Error::InvalidInput("distance to an empty sample".into()));
    }
    let a = x_i.row_mean();
    let b = x_j.row_mean();
    Ok((a - b).abs().sum())
}

/// Weighted cross moments between the unstable features and the pieces of
/// the outcome they can proxy for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmittedVariableDiagnostics {
    /// `(1/n) sum_i w_i V_i g(S_i)`, one entry per unstable column.
    pub cross_vg: DVector<f64>,
    /// `(1/n) sum_i w_i V_i^T S_i`, unstable by stable.
    pub cross_vs: DMatrix<f64>,
}

pub fn omitted_variable_diagnostics(
    ds: &Dataset,
    w: Option<&WeightVector>,
) -> Result<OmittedVariableDiagnostics> {
    let truth = ds.truth().ok_or(Error::MissingGroundTruth)?;
    let n = ds.n();
    let weights = match w {
        Some(w) => {
            check_len("weight length", n, w.len())?;
            w.as_vector().clone()
        }
        None => DVector::from_element(n, 1.0),
    };
    let v = ds.x().select_columns(&truth.unstable_cols);
    let s = ds.x().select_columns(&truth.stable_cols);
    let g = DVector::from_column_slice(&truth.nonlinear_term);
    let wv = crate::linalg::scale_rows(&v, &weights);
    Ok(OmittedVariableDiagnostics {
        cross_vg: wv.tr_mul(&g) / n as f64,
        cross_vs: wv.tr_mul(&s) / n as f64,
    })
}

/// Errors of one fitted model across a set of test environments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_env_rmse: BTreeMap<String, f64>,
    pub average_error: f64,
    pub stability_error: f64,
    pub beta_error_s: Option<f64>,
    pub beta_error_v: Option<f64>,
}

impl MetricsReport {
    pub fn new(
        per_env_rmse: BTreeMap<String, f64>,
        beta_error_s: Option<f64>,
        beta_error_v: Option<f64>,
    ) -> Result<Self> {
        let values: Vec<f64> = per_env_rmse.values().copied().collect();
        let (average_error, stability_error) = stability_metrics(&values)?;
        Ok(MetricsReport {
            per_env_rmse,
            average_error,
            stability_error,
            beta_error_s,
            beta_error_v,
        })
    }
}
