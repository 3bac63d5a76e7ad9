//! Joint optimisation of sample weights and regression coefficients.
//!
//! The objective is
//!
//! ```text
//! J(w, b) = 1/(2n) sum_i w_i (y_i - x_i b)^2
//!         + lambda2 L_B(w) + (lambda3/n) sum_i w_i^2 + lambda4 (mean(w) - 1)^2
//!         + lambda1 |b|_1
//! ```
//!
//! and is minimised by alternating a projected gradient step on `w` (with
//! `b` fixed) and a proximal gradient step on `b` (with `w` fixed), starting
//! from `w = 1`, `b = 0`. Both steps are safeguarded so `J` never increases.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::baselines::soft_threshold;
use crate::dataset::{Dataset, WeightVector};
use crate::decorrelation::{
    has_converged, initial_weights, project, weight_penalty, weight_penalty_gradient, Moments,
    MIN_STEP,
};
use crate::error::{check_len, Error, Result};
use crate::linalg::{largest_eigenvalue, weighted_gram};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    /// L1 penalty on the coefficients.
    pub lambda1: f64,
    /// Weight of the decorrelation loss.
    pub lambda2: f64,
    /// Penalty on the second moment of the weights.
    pub lambda3: f64,
    /// Penalty pulling the mean weight towards one.
    pub lambda4: f64,
    /// Weight step size, multiplied by `n` before use.
    pub lr_w: f64,
    /// Coefficient step size; `None` uses `1 / L` with `L` the largest
    /// eigenvalue of `X^T diag(w) X / n`.
    pub lr_beta: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
    pub weight_cap: Option<f64>,
    pub seed: u64,
    /// Amplitude of the uniform perturbation applied to the initial weights.
    pub init_jitter: f64,
    /// Keep `w = 1` and only update the coefficients.
    pub freeze_weights: bool,
    /// Iterations between refreshes of the Lipschitz estimate.
    pub lipschitz_refresh: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            lambda1: 0.01,
            lambda2: 10.0,
            lambda3: 0.01,
            lambda4: 100.0,
            lr_w: 0.05,
            lr_beta: None,
            max_iters: 5000,
            tol: 1e-6,
            weight_cap: None,
            seed: 0,
            init_jitter: 0.0,
            freeze_weights: false,
            lipschitz_refresh: 50,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let lambdas = [self.lambda1, self.lambda2, self.lambda3, self.lambda4];
        if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "penalties must be finite and nonnegative, got {lambdas:?}"
            )));
        }
        if !(self.lr_w > 0.0) || self.lr_beta.is_some_and(|lr| !(lr > 0.0)) {
            return Err(Error::InvalidInput("learning rates must be positive".into()));
        }
        if self.max_iters < 1 || !(self.tol > 0.0) {
            return Err(Error::InvalidInput(
                "max_iters must be >= 1 and tol must be positive".into(),
            ));
        }
        if self.weight_cap.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::InvalidInput("weight cap must be positive".into()));
        }
        if !(self.init_jitter >= 0.0) || self.lipschitz_refresh == 0 {
            return Err(Error::InvalidInput(
                "init_jitter must be >= 0 and lipschitz_refresh >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: DVector<f64>,
    pub weights: WeightVector,
    pub loss_trace: Vec<f64>,
    pub converged: bool,
    pub iters_used: usize,
}

/// Parts of `J` that depend on the weights only, cached across the
/// coefficient step.
struct WeightTerms {
    moments: Moments,
    value: f64,
}

impl WeightTerms {
    fn new(x: &DMatrix<f64>, w: &DVector<f64>, hp: &HyperParams) -> Self {
        let moments = Moments::new(x, w);
        let value = hp.lambda2 * moments.loss + weight_penalty(w, hp.lambda3, hp.lambda4);
        WeightTerms { moments, value }
    }
}

fn squared_residuals(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> DVector<f64> {
    (y - x * beta).map(|r| r * r)
}

fn regression_loss(w: &DVector<f64>, sq_resid: &DVector<f64>) -> f64 {
    w.dot(sq_resid) / (2.0 * w.len() as f64)
}

fn check_dims(ds: &Dataset, w: &WeightVector, beta: &DVector<f64>) -> Result<()> {
    check_len("weight vector length", ds.n(), w.len())?;
    check_len("coefficient length", ds.p(), beta.len())
}

/// Evaluates `J(w, b)` including the L1 term.
pub fn total_objective(
    ds: &Dataset,
    w: &WeightVector,
    beta: &DVector<f64>,
    hp: &HyperParams,
) -> Result<f64> {
    check_dims(ds, w, beta)?;
    let terms = WeightTerms::new(ds.x(), w.as_vector(), hp);
    let sq = squared_residuals(ds.x(), ds.y(), beta);
    Ok(regression_loss(w.as_vector(), &sq) + terms.value + hp.lambda1 * beta.lp_norm(1))
}

/// Gradients of `J` with respect to the weights and the coefficients.
///
/// The coefficient gradient uses `lambda1 * sign(b_j)` for the L1 term
/// (zero at `b_j = 0`).
pub fn total_objective_gradient(
    ds: &Dataset,
    w: &WeightVector,
    beta: &DVector<f64>,
    hp: &HyperParams,
) -> Result<(DVector<f64>, DVector<f64>)> {
    check_dims(ds, w, beta)?;
    let (x, y) = (ds.x(), ds.y());
    let n = ds.n() as f64;
    let w = w.as_vector();
    let resid = y - x * beta;
    let grad_w = resid.map(|r| r * r / (2.0 * n))
        + Moments::new(x, w).gradient(x) * hp.lambda2
        + weight_penalty_gradient(w, hp.lambda3, hp.lambda4);
    let grad_b = -x.tr_mul(&resid.component_mul(w)) / n
        + beta.map(|b| if b == 0.0 { 0.0 } else { hp.lambda1 * b.signum() });
    Ok((grad_w, grad_b))
}

fn lipschitz(x: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    let l = largest_eigenvalue(&(weighted_gram(x, w) / x.nrows() as f64));
    if l > 0.0 {
        l
    } else {
        1.0
    }
}

fn diverged(iteration: usize, trace: &[f64]) -> Error {
    Error::Diverged {
        iteration,
        trace_prefix: trace.iter().take(10).copied().collect(),
    }
}

/// Fits decorrelated weighting regression on `ds`.
///
/// `ds` is used as given; callers that want an intercept-free fit on
/// centered data should center first (see [`Dataset::centered`]).
pub fn dwr_fit(ds: &Dataset, hp: &HyperParams) -> Result<FitResult> {
    hp.validate()?;
    let (x, y) = (ds.x(), ds.y());
    let (n, p) = x.shape();
    if n < p {
        return Err(Error::InvalidInput(format!(
            "fitting needs n >= p, got n = {n}, p = {p}"
        )));
    }

    let mut w = if hp.freeze_weights {
        DVector::from_element(n, 1.0)
    } else {
        initial_weights(n, hp)
    };
    let mut beta = DVector::zeros(p);
    let mut terms = WeightTerms::new(x, &w, hp);
    let mut sq = squared_residuals(x, y, &beta);
    let mut current = regression_loss(&w, &sq) + terms.value;
    if !current.is_finite() {
        return Err(diverged(0, &[current]));
    }
    let mut trace = vec![current];
    let mut w_step = hp.lr_w * n as f64;
    let mut lip = lipschitz(x, &w);
    let mut converged = false;
    let mut iters_used = 0;

    for it in 1..=hp.max_iters {
        iters_used = it;

        if !hp.freeze_weights {
            let grad = sq.map(|r| r / (2.0 * n as f64))
                + terms.moments.gradient(x) * hp.lambda2
                + weight_penalty_gradient(&w, hp.lambda3, hp.lambda4);
            let l1 = hp.lambda1 * beta.lp_norm(1);
            while w_step >= MIN_STEP {
                let mut cand = &w - &grad * w_step;
                project(&mut cand, hp.weight_cap);
                let cand_terms = WeightTerms::new(x, &cand, hp);
                let value = regression_loss(&cand, &sq) + cand_terms.value + l1;
                if !value.is_finite() {
                    return Err(diverged(it, &trace));
                }
                if value <= current {
                    w = cand;
                    terms = cand_terms;
                    current = value;
                    break;
                }
                w_step *= 0.5;
            }
        }

        if hp.lr_beta.is_none() && (it % hp.lipschitz_refresh == 0) {
            lip = lipschitz(x, &w);
        }
        let resid = y - x * &beta;
        let grad_b = -x.tr_mul(&resid.component_mul(&w)) / n as f64;
        let mut b_step = hp.lr_beta.unwrap_or(1.0 / lip);
        let mut refreshed = false;
        while b_step >= MIN_STEP {
            let cand = (&beta - &grad_b * b_step).map(|v| soft_threshold(v, b_step * hp.lambda1));
            let cand_sq = squared_residuals(x, y, &cand);
            let value = regression_loss(&w, &cand_sq) + terms.value + hp.lambda1 * cand.lp_norm(1);
            if !value.is_finite() {
                return Err(diverged(it, &trace));
            }
            if value <= current {
                beta = cand;
                sq = cand_sq;
                current = value;
                break;
            }
            if hp.lr_beta.is_none() && !refreshed {
                lip = lipschitz(x, &w);
                b_step = 1.0 / lip;
                refreshed = true;
            } else {
                b_step *= 0.5;
            }
        }

        trace.push(current);
        if has_converged(&trace, hp.tol) {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        beta,
        weights: WeightVector::from_projected(w),
        loss_trace: trace,
        converged,
        iters_used,
    })
}
