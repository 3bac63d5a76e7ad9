//! Fitting one method on a training environment, with hyperparameters
//! chosen by validation RMSE.

use dwr_core::baselines::{BaselineKind, BaselineSpec};
use dwr_core::dataset::Centering;
use dwr_core::metrics::rmse;
use dwr_core::{dwr_fit, Dataset, HyperParams, WeightVector};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::config::{DwrGrid, MethodName};
use crate::error::{HarnessError, Result};

/// One point of a method's hyperparameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver")]
pub enum Candidate {
    Baseline(BaselineSpec),
    Dwr(HyperParams),
}

/// Hyperparameter grids shared by every method of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub hyper_grid: Vec<f64>,
    pub dwr_grid: DwrGrid,
    pub dwr: HyperParams,
    /// Adds plain least squares to the Lasso candidates.
    pub lasso_includes_ols: bool,
}

impl SearchSpace {
    pub fn candidates(&self, method: MethodName) -> Vec<Candidate> {
        let base = |kind, l1, l2| Candidate::Baseline(BaselineSpec::new(kind, l1, l2));
        match method {
            MethodName::Ols => vec![Candidate::Baseline(BaselineSpec::ols())],
            MethodName::Lasso => {
                let mut c = Vec::new();
                if self.lasso_includes_ols {
                    c.push(Candidate::Baseline(BaselineSpec::ols()));
                }
                c.extend(self.hyper_grid.iter().map(|&l| base(BaselineKind::Lasso, l, 0.0)));
                c
            }
            MethodName::Ridge => self
                .hyper_grid
                .iter()
                .map(|&l| base(BaselineKind::Ridge, l, 0.0))
                .collect(),
            MethodName::IiLasso => self
                .hyper_grid
                .iter()
                .flat_map(|&l1| {
                    self.hyper_grid
                        .iter()
                        .map(move |&l2| base(BaselineKind::IiLasso, l1, l2))
                })
                .collect(),
            MethodName::Dwr => self
                .dwr_grid
                .combinations(&self.dwr)
                .into_iter()
                .map(Candidate::Dwr)
                .collect(),
        }
    }
}

/// A model fitted on centered training data, predicting on the raw scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub method: MethodName,
    pub candidate: Candidate,
    /// Coefficients in the centered basis.
    pub beta: DVector<f64>,
    pub centering: Centering,
    /// Learned sample weights (DWR only).
    pub weights: Option<WeightVector>,
    pub converged: bool,
}

impl FittedModel {
    pub fn predict(&self, ds: &Dataset) -> Result<DVector<f64>> {
        Ok(self.centering.predict(ds.x(), &self.beta)?)
    }

    pub fn rmse(&self, ds: &Dataset) -> Result<f64> {
        Ok(rmse(ds.y(), &self.predict(ds)?)?)
    }
}

/// Fits a single candidate. `seed` drives any randomness inside the
/// solver (DWR's initial-weight jitter).
pub fn fit_candidate(
    method: MethodName,
    train: &Dataset,
    candidate: &Candidate,
    seed: u64,
) -> Result<FittedModel> {
    let (centered, centering) = train.centered();
    let (candidate, beta, weights, converged) = match candidate {
        Candidate::Baseline(spec) => {
            let beta = spec.fit(&centered)?;
            (candidate.clone(), beta, None, true)
        }
        Candidate::Dwr(hp) => {
            let hp = HyperParams { seed, ..hp.clone() };
            let fit = dwr_fit(&centered, &hp)?;
            (Candidate::Dwr(hp), fit.beta, Some(fit.weights), fit.converged)
        }
    };
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(HarnessError::Numerical(format!(
            "{method} produced non-finite coefficients"
        )));
    }
    Ok(FittedModel {
        method,
        candidate,
        beta,
        centering,
        weights,
        converged,
    })
}

/// Fits every candidate of `method` and keeps the one with the lowest mean
/// RMSE over `validation`. With a single candidate no validation is done.
/// Candidates that fail are skipped; the method fails only if all do.
pub fn select_and_fit(
    method: MethodName,
    train: &Dataset,
    validation: &[Dataset],
    space: &SearchSpace,
    seed: u64,
) -> Result<FittedModel> {
    let candidates = space.candidates(method);
    if candidates.len() == 1 {
        return fit_candidate(method, train, &candidates[0], seed);
    }
    if validation.is_empty() {
        return Err(HarnessError::Config(format!(
            "{method} has {} candidates but no validation data",
            candidates.len()
        )));
    }
    let mut best: Option<(f64, FittedModel)> = None;
    let mut last_err = None;
    for cand in &candidates {
        let model = match fit_candidate(method, train, cand, seed) {
            Ok(m) => m,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let mut total = 0.0;
        for v in validation {
            total += model.rmse(v)?;
        }
        let score = total / validation.len() as f64;
        // strict comparison keeps the first of tied candidates
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, model));
        }
    }
    match (best, last_err) {
        (Some((_, m)), _) => Ok(m),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!("candidate list is nonempty"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_hyper_grid;

    fn space() -> SearchSpace {
        SearchSpace {
            hyper_grid: default_hyper_grid(),
            dwr_grid: DwrGrid::default(),
            dwr: HyperParams::default(),
            lasso_includes_ols: false,
        }
    }

    #[test]
    fn candidate_counts() {
        let s = space();
        assert_eq!(s.candidates(MethodName::Ols).len(), 1);
        assert_eq!(s.candidates(MethodName::Lasso).len(), 5);
        assert_eq!(s.candidates(MethodName::Ridge).len(), 5);
        assert_eq!(s.candidates(MethodName::IiLasso).len(), 25);
        assert_eq!(s.candidates(MethodName::Dwr).len(), 1);
        let merged = SearchSpace {
            lasso_includes_ols: true,
            ..s
        };
        let lasso = merged.candidates(MethodName::Lasso);
        assert_eq!(lasso.len(), 6);
        assert_eq!(lasso[0], Candidate::Baseline(BaselineSpec::ols()));
    }
}
