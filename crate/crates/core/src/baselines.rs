//! Reference regressors: OLS, Lasso, Ridge and the independently
//! interpretable Lasso (IILasso).
//!
//! Lasso and IILasso use the `1/(2n) |y - X b|^2` loss scaling; Ridge uses the
//! unscaled `|y - X b|^2`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{least_squares, solve_spd};

const CD_TOL: f64 = 1e-13;
const CD_MAX_SWEEPS: usize = 200_000;

/// Correlations at or above this are treated as exact duplicates.
pub const MAX_CORRELATION: f64 = 1.0 - 1e-12;

/// Ordinary least squares by Householder QR.
pub fn ols_fit(ds: &Dataset) -> Result<DVector<f64>> {
    least_squares(ds.x(), ds.y(), None)
}

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Minimises `1/(2n) |y - X b|^2 + lambda1 |b|_1` by cyclic coordinate
/// descent.
pub fn lasso_fit(ds: &Dataset, lambda1: f64) -> Result<DVector<f64>> {
    check_lambda("lambda1", lambda1)?;
    let zero = DMatrix::zeros(ds.p(), ds.p());
    coordinate_descent(ds, lambda1, 0.0, &zero)
}

/// Minimises `1/(2n) |y - X b|^2 + lambda1 |b|_1 + lambda2 |b|^T R |b|` with
/// `R` from [`correlation_penalty_matrix`].
pub fn iilasso_fit(ds: &Dataset, lambda1: f64, lambda2: f64) -> Result<DVector<f64>> {
    check_lambda("lambda1", lambda1)?;
    check_lambda("lambda2", lambda2)?;
    let r = correlation_penalty_matrix(ds.x())?;
    coordinate_descent(ds, lambda1, lambda2, &r)
}

/// `R_jk = |r_jk| / (1 - |r_jk|)` with zero diagonal, where `r_jk` is the
/// correlation of columns `j` and `k` after scaling each to unit norm.
pub fn correlation_penalty_matrix(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = x.ncols();
    let norms: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
    if let Some(column) = norms.iter().position(|n| !(*n > 0.0)) {
        return Err(Error::DegenerateColumn { column });
    }
    let gram = x.tr_mul(x);
    let mut out = DMatrix::zeros(p, p);
    for j in 0..p {
        for k in (j + 1)..p {
            let r = (gram[(j, k)] / (norms[j] * norms[k])).abs();
            if r >= MAX_CORRELATION {
                return Err(Error::DegenerateCorrelation { j, k, r });
            }
            let v = r / (1.0 - r);
            out[(j, k)] = v;
            out[(k, j)] = v;
        }
    }
    Ok(out)
}

fn coordinate_descent(
    ds: &Dataset,
    lambda1: f64,
    lambda2: f64,
    r: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let n = ds.n() as f64;
    let p = ds.p();
    let gram = ds.x().tr_mul(ds.x()) / n;
    let c = ds.x().tr_mul(ds.y()) / n;
    let mut beta = DVector::<f64>::zeros(p);
    // gradient of the smooth loss is gram * beta - c; keep gram * beta current
    let mut gb = DVector::<f64>::zeros(p);
    for _ in 0..CD_MAX_SWEEPS {
        let mut max_delta = 0.0f64;
        let mut max_beta = 0.0f64;
        for j in 0..p {
            let gjj = gram[(j, j)];
            let old = beta[j];
            let partial = c[j] - (gb[j] - gjj * old);
            let penalty = if lambda2 > 0.0 {
                let cross: f64 = (0..p).map(|k| r[(j, k)] * beta[k].abs()).sum();
                lambda1 + 2.0 * lambda2 * cross
            } else {
                lambda1
            };
            let new = if gjj > 0.0 {
                soft_threshold(partial, penalty) / gjj
            } else {
                0.0
            };
            if new != old {
                let delta = new - old;
                gb.axpy(delta, &gram.column(j), 1.0);
                beta[j] = new;
                max_delta = max_delta.max(delta.abs());
            }
            max_beta = max_beta.max(new.abs());
        }
        if max_delta <= CD_TOL * max_beta.max(1.0) {
            return Ok(beta);
        }
    }
    Err(Error::Diverged {
        iteration: CD_MAX_SWEEPS,
        trace_prefix: Vec::new(),
    })
}

/// How the Ridge penalty enters the objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum RidgePenalty {
    /// `lambda1 |b|_2^2`, solved in closed form.
    #[default]
    Squared,
    /// `lambda1 |b|_2`, solved by bisection on the norm of the solution.
    Norm,
}

/// Closed-form Ridge: `(X^T X + lambda1 I)^-1 X^T y`.
pub fn ridge_fit(ds: &Dataset, lambda1: f64) -> Result<DVector<f64>> {
    ridge_fit_with(ds, lambda1, RidgePenalty::Squared)
}

pub fn ridge_fit_with(ds: &Dataset, lambda1: f64, penalty: RidgePenalty) -> Result<DVector<f64>> {
    check_lambda("lambda1", lambda1)?;
    let p = ds.p();
    let gram = ds.x().tr_mul(ds.x());
    let xty = ds.x().tr_mul(ds.y());
    match penalty {
        RidgePenalty::Squared => solve_spd(&(gram + DMatrix::identity(p, p) * lambda1), &xty),
        RidgePenalty::Norm => norm_ridge(gram, xty, lambda1),
    }
}

// Stationarity of |y - Xb|^2 + lambda |b| reads (X^T X + mu I) b = X^T y with
// mu = lambda / (2 |b|). mu |b(mu)| increases from 0 to |X^T y| in mu, so a
// root exists exactly when |X^T y| > lambda / 2; otherwise b = 0.
fn norm_ridge(gram: DMatrix<f64>, xty: DVector<f64>, lambda1: f64) -> Result<DVector<f64>> {
    let half = lambda1 / 2.0;
    if xty.norm() <= half {
        return Ok(DVector::zeros(xty.len()));
    }
    let eig = gram.symmetric_eigen();
    let z = eig.eigenvectors.tr_mul(&xty);
    let beta_at = |mu: f64| {
        let scaled = DVector::from_fn(z.len(), |i, _| z[i] / (eig.eigenvalues[i].max(0.0) + mu));
        &eig.eigenvectors * scaled
    };
    let phi = |mu: f64| mu * beta_at(mu).norm() - half;
    let mut hi = half.max(1.0);
    while phi(hi) < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Singular("norm-penalised ridge has no root".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(beta_at(0.5 * (lo + hi)))
}

fn check_lambda(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineKind {
    #[serde(rename = "OLS")]
    Ols,
    Lasso,
    Ridge,
    #[serde(rename = "IILasso")]
    IiLasso,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineSpec {
    pub kind: BaselineKind,
    #[serde(default)]
    pub lambda1: f64,
    /// Only used by IILasso.
    #[serde(default)]
    pub lambda2: f64,
    #[serde(default)]
    pub ridge_penalty: RidgePenalty,
}

impl BaselineSpec {
    pub fn ols() -> Self {
        Self::new(BaselineKind::Ols, 0.0, 0.0)
    }

    pub fn new(kind: BaselineKind, lambda1: f64, lambda2: f64) -> Self {
        BaselineSpec {
            kind,
            lambda1,
            lambda2,
            ridge_penalty: RidgePenalty::Squared,
        }
    }

    pub fn fit(&self, ds: &Dataset) -> Result<DVector<f64>> {
        match self.kind {
            BaselineKind::Ols => ols_fit(ds),
            BaselineKind::Lasso => lasso_fit(ds, self.lambda1),
            BaselineKind::Ridge => ridge_fit_with(ds, self.lambda1, self.ridge_penalty),
            BaselineKind::IiLasso => iilasso_fit(ds, self.lambda1, self.lambda2),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn design() -> Dataset {
        let x = DMatrix::from_row_slice(
            6,
            3,
            &[
                1.0, 0.2, -0.4, -0.5, 1.1, 0.3, 0.8, -0.9, 1.2, -1.3, 0.1, -0.2, 0.4, 0.6, -1.0,
                0.0, -1.4, 0.5,
            ],
        );
        let y = DVector::from_vec(vec![1.0, -0.3, 2.2, -1.9, 0.1, -0.8]);
        Dataset::from_xy(x, y).unwrap()
    }

    #[test]
    fn soft_threshold_example() {
        // x^T x / n = 1 and x^T y / n = 3
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        let y = DVector::from_vec(vec![3.0, -3.0]);
        let ds = Dataset::from_xy(x, y).unwrap();
        let b = lasso_fit(&ds, 1.0).unwrap();
        assert_abs_diff_eq!(b[0], 2.0, epsilon = 1e-12);
        assert_eq!(b[1], 0.0);
    }

    #[test]
    fn huge_lasso_penalty_zeroes_everything() {
        assert_eq!(lasso_fit(&design(), 1e6).unwrap(), DVector::zeros(3));
    }

    #[test]
    fn tiny_lasso_penalty_approaches_ols() {
        let ds = design();
        let diff = lasso_fit(&ds, 1e-9).unwrap() - ols_fit(&ds).unwrap();
        assert!(diff.amax() < 1e-4);
    }

    #[test]
    fn ridge_identity_example() {
        let x = DMatrix::identity(2, 2);
        let y = DVector::from_vec(vec![1.0, 0.0]);
        let ds = Dataset::from_xy(x, y).unwrap();
        let b = ridge_fit(&ds, 1.0).unwrap();
        assert_abs_diff_eq!(b[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn ridge_limits() {
        let ds = design();
        let ols = ols_fit(&ds).unwrap();
        assert!((ridge_fit(&ds, 1e-10).unwrap() - ols).amax() < 1e-6);
        assert!(ridge_fit(&ds, 1e12).unwrap().amax() < 1e-9);
    }

    #[test]
    fn norm_ridge_is_stationary() {
        let ds = design();
        let lambda = 0.7;
        let b = ridge_fit_with(&ds, lambda, RidgePenalty::Norm).unwrap();
        let grad = ds.x().tr_mul(&(ds.x() * &b - ds.y())) * 2.0 + &b * (lambda / b.norm());
        assert!(grad.amax() < 1e-8, "{grad}");
        let zero = ridge_fit_with(&ds, 1e6, RidgePenalty::Norm).unwrap();
        assert_eq!(zero, DVector::zeros(3));
    }

    #[test]
    fn penalty_matrix_formula() {
        // unit-norm columns with inner product 0.5
        let x = DMatrix::from_row_slice(
            3,
            2,
            &[1.0, 0.5, 0.0, 0.75f64.sqrt(), 0.0, 0.0],
        );
        let r = correlation_penalty_matrix(&x).unwrap();
        assert_abs_diff_eq!(r[(0, 1)], 1.0, epsilon = 1e-12);
        assert_eq!(r[(0, 0)], 0.0);
        assert_eq!(r[(1, 0)], r[(0, 1)]);
    }

    #[test]
    fn duplicate_columns_are_degenerate() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, -1.0, -1.0]);
        assert!(matches!(
            correlation_penalty_matrix(&x),
            Err(Error::DegenerateCorrelation { j: 0, k: 1, .. })
        ));
    }

    #[test]
    fn iilasso_on_orthogonal_design_is_lasso() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0]);
        let y = DVector::from_vec(vec![2.0, 0.5, -0.3, -1.7]);
        let ds = Dataset::from_xy(x, y).unwrap();
        let a = iilasso_fit(&ds, 0.1, 5.0).unwrap();
        let b = lasso_fit(&ds, 0.1).unwrap();
        assert!((a - b).amax() < 1e-6);
    }

    #[test]
    fn nonpositive_penalties_are_rejected() {
        let ds = design();
        assert!(lasso_fit(&ds, 0.0).is_err());
        assert!(ridge_fit(&ds, -1.0).is_err());
        assert!(iilasso_fit(&ds, 0.1, 0.0).is_err());
    }

    #[test]
    fn spec_dispatch() {
        let ds = design();
        assert_eq!(BaselineSpec::ols().fit(&ds).unwrap(), ols_fit(&ds).unwrap());
        let spec = BaselineSpec::new(BaselineKind::IiLasso, 0.05, 0.1);
        assert_eq!(spec.fit(&ds).unwrap(), iilasso_fit(&ds, 0.05, 0.1).unwrap());
    }
}
