//! First-moment decorrelation loss and the penalised weight learner.
//!
//! For weights `w` and covariates `x` (n by p) the loss is
//!
//! ```text
//! L_B(w) = sum_j || x_j^T diag(w) x_{-j} / n - (x_j^T w / n) (x_{-j}^T w / n) ||^2
//! ```
//!
//! where `x_{-j}` is `x` with column `j` zeroed. Writing `C = X^T diag(w) X / n`
//! and `m = X^T w / n`, this is the squared Frobenius norm of the off-diagonal
//! part of `C - m m^T`, which is how it is evaluated here in `O(n p^2)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::WeightVector;
use crate::dwr::HyperParams;
use crate::error::{check_len, Error, Result};
use crate::linalg::weighted_gram;

/// Relative-change window used by the convergence test.
pub(crate) const CONVERGENCE_WINDOW: usize = 5;
/// Step sizes below this are treated as "no descent direction left".
pub(crate) const MIN_STEP: f64 = 1e-14;

/// Weighted cross moments and the resulting loss at one weight vector.
#[derive(Debug, Clone)]
pub(crate) struct Moments {
    pub loss: f64,
    /// Off-diagonal part of `C - m m^T`.
    discrepancy: DMatrix<f64>,
    mean: DVector<f64>,
}

impl Moments {
    pub fn new(x: &DMatrix<f64>, w: &DVector<f64>) -> Self {
        let n = x.nrows() as f64;
        let cross = weighted_gram(x, w) / n;
        let mean = x.tr_mul(w) / n;
        let mut discrepancy = cross - &mean * mean.transpose();
        discrepancy.fill_diagonal(0.0);
        let loss = discrepancy.norm_squared();
        Moments {
            loss,
            discrepancy,
            mean,
        }
    }

    /// `dL_B/dw_i = (x_i^T G x_i - 2 x_i^T G m) / n` with `G = 2 D`.
    pub fn gradient(&self, x: &DMatrix<f64>) -> DVector<f64> {
        let n = x.nrows();
        let xg = x * (&self.discrepancy * 2.0);
        let mut grad = DVector::zeros(n);
        for (k, col) in x.column_iter().enumerate() {
            let shift = 2.0 * self.mean[k];
            for i in 0..n {
                grad[i] += xg[(i, k)] * (col[i] - shift);
            }
        }
        grad / n as f64
    }
}

fn check_weights(x: &DMatrix<f64>, w: &WeightVector) -> Result<()> {
    check_len("weight vector length", x.nrows(), w.len())?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("covariates contain NaN or Inf".into()));
    }
    Ok(())
}

pub fn decorrelation_loss(x: &DMatrix<f64>, w: &WeightVector) -> Result<f64> {
    check_weights(x, w)?;
    Ok(Moments::new(x, w.as_vector()).loss)
}

/// Gradient of [`decorrelation_loss`] with respect to the weights.
pub fn decorrelation_gradient(x: &DMatrix<f64>, w: &WeightVector) -> Result<DVector<f64>> {
    check_weights(x, w)?;
    Ok(Moments::new(x, w.as_vector()).gradient(x))
}

/// Variance and sum penalties on the weights.
pub(crate) fn weight_penalty(w: &DVector<f64>, lambda3: f64, lambda4: f64) -> f64 {
    let n = w.len() as f64;
    lambda3 / n * w.norm_squared() + lambda4 * (w.mean() - 1.0).powi(2)
}

pub(crate) fn weight_penalty_gradient(w: &DVector<f64>, lambda3: f64, lambda4: f64) -> DVector<f64> {
    let n = w.len() as f64;
    let shift = 2.0 * lambda4 * (w.mean() - 1.0) / n;
    w.map(|wi| 2.0 * lambda3 * wi / n + shift)
}

/// `L_B + (lambda3/n) sum w^2 + lambda4 (mean(w) - 1)^2`.
pub fn weight_objective(x: &DMatrix<f64>, w: &WeightVector, hp: &HyperParams) -> Result<f64> {
    check_weights(x, w)?;
    Ok(Moments::new(x, w.as_vector()).loss + weight_penalty(w.as_vector(), hp.lambda3, hp.lambda4))
}

/// Gradient of [`weight_objective`].
pub fn weight_objective_gradient(
    x: &DMatrix<f64>,
    w: &WeightVector,
    hp: &HyperParams,
) -> Result<DVector<f64>> {
    check_weights(x, w)?;
    Ok(Moments::new(x, w.as_vector()).gradient(x)
        + weight_penalty_gradient(w.as_vector(), hp.lambda3, hp.lambda4))
}

/// Starting weights: all ones, optionally perturbed by `init_jitter * U(-1, 1)`.
pub(crate) fn initial_weights(n: usize, hp: &HyperParams) -> DVector<f64> {
    if hp.init_jitter == 0.0 {
        return DVector::from_element(n, 1.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut w = DVector::from_fn(n, |_, _| 1.0 + hp.init_jitter * rng.random_range(-1.0..1.0));
    project(&mut w, hp.weight_cap);
    w
}

/// Clamps onto `[0, cap]`.
pub(crate) fn project(w: &mut DVector<f64>, cap: Option<f64>) {
    let hi = cap.unwrap_or(f64::INFINITY);
    w.apply(|v| *v = v.clamp(0.0, hi));
}

pub(crate) fn has_converged(trace: &[f64], tol: f64) -> bool {
    let t = trace.len();
    if t <= CONVERGENCE_WINDOW {
        return false;
    }
    let old = trace[t - 1 - CONVERGENCE_WINDOW];
    let new = trace[t - 1];
    (old - new).abs() <= tol * old.abs().max(f64::MIN_POSITIVE)
}

/// Outcome of [`fit_weights`].
#[derive(Debug, Clone)]
pub struct WeightFit {
    pub weights: WeightVector,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iters_used: usize,
}

/// Minimises [`weight_objective`] by projected gradient descent.
///
/// The step is `lr_w * n` times the gradient (the gradient of every term is
/// `O(1/n)` per weight) and is halved whenever it would increase the
/// objective, so the objective trace is non-increasing.
pub fn fit_weights(x: &DMatrix<f64>, hp: &HyperParams) -> Result<WeightFit> {
    hp.validate()?;
    let (n, p) = x.shape();
    if n < p {
        return Err(Error::InvalidInput(format!(
            "weight learning needs n >= p, got n = {n}, p = {p}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("covariates contain NaN or Inf".into()));
    }

    let objective = |m: &Moments, w: &DVector<f64>| m.loss + weight_penalty(w, hp.lambda3, hp.lambda4);

    let mut w = initial_weights(n, hp);
    let mut moments = Moments::new(x, &w);
    let mut current = objective(&moments, &w);
    if !current.is_finite() {
        return Err(Error::Diverged {
            iteration: 0,
            trace_prefix: vec![current],
        });
    }
    let mut trace = vec![current];
    let mut step = hp.lr_w * n as f64;
    let mut converged = false;
    let mut iters_used = 0;

    for it in 1..=hp.max_iters {
        iters_used = it;
        let grad = moments.gradient(x) + weight_penalty_gradient(&w, hp.lambda3, hp.lambda4);
        let mut accepted = None;
        while step >= MIN_STEP {
            let mut cand = &w - &grad * step;
            project(&mut cand, hp.weight_cap);
            let cand_moments = Moments::new(x, &cand);
            let value = objective(&cand_moments, &cand);
            if !value.is_finite() {
                return Err(Error::Diverged {
                    iteration: it,
                    trace_prefix: trace.iter().take(10).copied().collect(),
                });
            }
            if value <= current {
                accepted = Some((cand, cand_moments, value));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, cand_moments, value)) = accepted else {
            // no step decreases the objective any more
            converged = true;
            break;
        };
        w = cand;
        moments = cand_moments;
        current = value;
        trace.push(current);
        if has_converged(&trace, hp.tol) {
            converged = true;
            break;
        }
    }

    Ok(WeightFit {
        weights: WeightVector::from_projected(w),
        objective_trace: trace,
        converged,
        iters_used,
    })
}

/// Learns decorrelating sample weights; see [`fit_weights`].
pub fn learn_weights(x: &DMatrix<f64>, hp: &HyperParams) -> Result<WeightVector> {
    fit_weights(x, hp).map(|f| f.weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthogonal() -> DMatrix<f64> {
        DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0])
    }

    #[test]
    fn orthogonal_design_has_zero_loss_and_gradient() {
        let w = WeightVector::uniform(4);
        assert_eq!(decorrelation_loss(&orthogonal(), &w).unwrap(), 0.0);
        let g = decorrelation_gradient(&orthogonal(), &w).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn perfectly_correlated_pair() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, -1.0]);
        let loss = decorrelation_loss(&x, &WeightVector::uniform(2)).unwrap();
        assert_eq!(loss, 2.0);
    }

    #[test]
    fn zero_weights_give_zero_loss() {
        let x = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.5, -3.0, 0.1, 4.0, 2.0, 2.0, -1.0]);
        let w = WeightVector::new(DVector::zeros(3)).unwrap();
        assert_eq!(decorrelation_loss(&x, &w).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let w = WeightVector::uniform(3);
        assert!(matches!(
            decorrelation_loss(&orthogonal(), &w),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn weight_objective_examples() {
        let hp = HyperParams {
            lambda3: 0.0,
            lambda4: 1.0,
            ..HyperParams::default()
        };
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -0.5, 0.3, 2.0, 1.0]);
        let w = WeightVector::uniform(3);
        assert_eq!(
            weight_objective(&x, &w, &hp).unwrap(),
            decorrelation_loss(&x, &w).unwrap()
        );

        // a single nonzero weight leaves no cross moment: L_B = 0
        let hp = HyperParams {
            lambda3: 1.0,
            lambda4: 1.0,
            ..HyperParams::default()
        };
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, -2.0, 5.0]);
        let w = WeightVector::new(DVector::from_vec(vec![2.0, 0.0])).unwrap();
        assert_eq!(decorrelation_loss(&x, &w).unwrap(), 0.0);
        assert_eq!(weight_objective(&x, &w, &hp).unwrap(), 2.0);

        let hp = HyperParams {
            lambda3: 0.0,
            lambda4: 0.0,
            ..HyperParams::default()
        };
        assert_eq!(
            weight_objective(&orthogonal(), &WeightVector::uniform(4), &hp).unwrap(),
            0.0
        );
    }

    #[test]
    fn learner_rejects_wide_data() {
        let x = DMatrix::from_element(2, 3, 1.0);
        assert!(fit_weights(&x, &HyperParams::default()).is_err());
    }

    #[test]
    fn learner_reports_divergence() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -0.5, 0.3, 2.0, 1.0]);
        let hp = HyperParams {
            lr_w: 1e306,
            ..HyperParams::default()
        };
        match fit_weights(&x, &hp) {
            Err(Error::Diverged { iteration, .. }) => assert_eq!(iteration, 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn learner_never_increases_objective() {
        let x = DMatrix::from_row_slice(
            6,
            2,
            &[1.0, 0.9, -1.0, -0.7, 0.5, 0.6, -0.2, -0.4, 2.0, 1.5, -1.3, -1.0],
        );
        let hp = HyperParams {
            lambda3: 0.01,
            lambda4: 1.0,
            max_iters: 200,
            ..HyperParams::default()
        };
        let fit = fit_weights(&x, &hp).unwrap();
        assert!(fit.objective_trace.windows(2).all(|p| p[1] <= p[0]));
        assert!(fit.weights.as_slice().iter().all(|w| *w >= 0.0));
    }
}
