//! Dataset, ground-truth and sample-weight types.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Known generating structure of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Columns with a causal effect on the outcome.
    pub stable_cols: Vec<usize>,
    /// Columns without a causal effect (true coefficient zero).
    pub unstable_cols: Vec<usize>,
    /// Unstable columns whose relation to the outcome was manipulated by
    /// biased selection. Empty for unselected data.
    pub biased_cols: Vec<usize>,
    pub beta_true: Vec<f64>,
    /// Per-sample value of the omitted nonlinear term.
    pub nonlinear_term: Vec<f64>,
    /// Per-sample value of the noiseless outcome function.
    pub f_values: Vec<f64>,
}

impl GroundTruth {
    pub(crate) fn validate(&self, n: usize, p: usize) -> Result<()> {
        check_len("beta_true", p, self.beta_true.len())?;
        check_len("nonlinear_term", n, self.nonlinear_term.len())?;
        check_len("f_values", n, self.f_values.len())?;
        let mut seen = vec![false; p];
        for &c in self.stable_cols.iter().chain(&self.unstable_cols) {
            if c >= p || seen[c] {
                return Err(Error::InvalidInput(format!(
                    "stable/unstable columns do not partition 0..{p} (column {c})"
                )));
            }
            seen[c] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidInput(format!(
                "stable/unstable columns do not cover 0..{p}"
            )));
        }
        if let Some(c) = self
            .biased_cols
            .iter()
            .find(|c| !self.unstable_cols.contains(c))
        {
            return Err(Error::InvalidInput(format!(
                "biased column {c} is not an unstable column"
            )));
        }
        if let Some(&c) = self
            .unstable_cols
            .iter()
            .find(|&&c| self.beta_true[c] != 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "unstable column {c} has a nonzero true coefficient"
            )));
        }
        Ok(())
    }

    pub(crate) fn select_rows(&self, rows: &[usize]) -> Self {
        GroundTruth {
            nonlinear_term: rows.iter().map(|&i| self.nonlinear_term[i]).collect(),
            f_values: rows.iter().map(|&i| self.f_values[i]).collect(),
            ..self.clone()
        }
    }
}

/// Covariates `x` (n samples by p features) and outcome `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    feature_names: Vec<String>,
    truth: Option<GroundTruth>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, feature_names: Vec<String>) -> Result<Self> {
        let (n, p) = x.shape();
        if n < 2 || p < 2 {
            return Err(Error::InvalidInput(format!(
                "dataset needs n >= 2 and p >= 2, got n = {n}, p = {p}"
            )));
        }
        check_len("outcome length", n, y.len())?;
        check_len("feature names", p, feature_names.len())?;
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("dataset contains NaN or Inf".into()));
        }
        Ok(Dataset {
            x,
            y,
            feature_names,
            truth: None,
        })
    }

    /// Builds a dataset with features named `X1..Xp`.
    pub fn from_xy(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let names = default_feature_names(x.ncols());
        Self::new(x, y, names)
    }

    pub fn with_truth(mut self, truth: GroundTruth) -> Result<Self> {
        truth.validate(self.n(), self.p())?;
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn truth(&self) -> Option<&GroundTruth> {
        self.truth.as_ref()
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DVector<f64>, Vec<String>, Option<GroundTruth>) {
        (self.x, self.y, self.feature_names, self.truth)
    }

    /// Returns a dataset made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&i| i >= self.n()) {
            return Err(Error::InvalidInput(format!("row {bad} out of range")));
        }
        let x = self.x.select_rows(rows);
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i]));
        let mut ds = Dataset::new(x, y, self.feature_names.clone())?;
        ds.truth = self.truth.as_ref().map(|t| t.select_rows(rows));
        Ok(ds)
    }

    /// Column means of `x` and the mean of `y`.
    pub fn centering(&self) -> Centering {
        Centering {
            x_mean: self.x.row_mean().transpose(),
            y_mean: self.y.mean(),
        }
    }

    /// Applies a centering computed elsewhere (usually on training data).
    pub fn center_with(&self, c: &Centering) -> Result<Self> {
        check_len("centering width", self.p(), c.x_mean.len())?;
        let mut x = self.x.clone();
        for (j, mut col) in x.column_iter_mut().enumerate() {
            col.add_scalar_mut(-c.x_mean[j]);
        }
        let y = self.y.add_scalar(-c.y_mean);
        Ok(Dataset {
            x,
            y,
            feature_names: self.feature_names.clone(),
            truth: self.truth.clone(),
        })
    }

    /// Centers every column of `x` and `y` on their own means.
    pub fn centered(&self) -> (Self, Centering) {
        let c = self.centering();
        let ds = self
            .center_with(&c)
            .expect("centering computed from the same dataset");
        (ds, c)
    }
}

/// Feature and outcome means used to move between raw and centered data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centering {
    pub x_mean: DVector<f64>,
    pub y_mean: f64,
}

impl Centering {
    /// Predicts raw-scale outcomes for raw covariates from coefficients
    /// fitted on centered data.
    pub fn predict(&self, x: &DMatrix<f64>, beta: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("coefficient length", x.ncols(), beta.len())?;
        check_len("centering width", x.ncols(), self.x_mean.len())?;
        let offset = self.y_mean - self.x_mean.dot(beta);
        Ok((x * beta).add_scalar(offset))
    }
}

pub fn default_feature_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("X{j}")).collect()
}

/// Nonnegative per-sample weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(DVector<f64>);

impl WeightVector {
    pub fn new(w: DVector<f64>) -> Result<Self> {
        if let Some((i, v)) = w.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "weight {i} is {v}, weights must be finite and nonnegative"
            )));
        }
        Ok(WeightVector(w))
    }

    /// Like [`WeightVector::new`], additionally enforcing `w_i <= cap`.
    pub fn with_cap(w: DVector<f64>, cap: f64) -> Result<Self> {
        let w = Self::new(w)?;
        if let Some((i, v)) = w.0.iter().enumerate().find(|(_, v)| **v > cap) {
            return Err(Error::InvalidInput(format!(
                "weight {i} is {v}, above the cap {cap}"
            )));
        }
        Ok(w)
    }

    pub fn uniform(n: usize) -> Self {
        WeightVector(DVector::from_element(n, 1.0))
    }

    pub(crate) fn from_projected(w: DVector<f64>) -> Self {
        debug_assert!(w.iter().all(|v| *v >= 0.0));
        WeightVector(w)
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.sum()
    }

    pub fn mean(&self) -> f64 {
        self.0.mean()
    }

    /// Kish effective sample size `(sum w)^2 / sum w^2`.
    pub fn effective_sample_size(&self) -> f64 {
        let s2 = self.0.norm_squared();
        if s2 == 0.0 {
            0.0
        } else {
            self.sum().powi(2) / s2
        }
    }

    /// Rescales so the weights average to one. All-zero weights are left alone.
    pub fn normalized(&self) -> Self {
        let m = self.mean();
        if m > 0.0 {
            WeightVector(&self.0 / m)
        } else {
            self.clone()
        }
    }
}
