//! Synthetic environments with stable and unstable features.
//!
//! Columns `0..p/2` are the stable features `S`, columns `p/2..p` the
//! unstable features `V`. Three causal structures are available:
//!
//! * [`GraphKind::SIndepV`]: `S_j = 0.8 Z_j + 0.2 Z_{j+1}`, `V` independent
//!   standard normal.
//! * [`GraphKind::StoV`]: `S` as above, `V_j = 0.8 S_j + 0.2 S_{j+1} + e`.
//! * [`GraphKind::VtoS`]: `V` standard normal, `S_j = 0.2 V_j + 0.8 V_{j+1} + e`.
//!
//! Indices wrap around in the last two. The outcome is
//! `y = S b_s + g(S) + e` where `g` is `S_1 S_2 S_3` or its exponential, so a
//! linear model is misspecified. Environments are drawn by biased selection
//! on the last unstable columns, which makes their correlation with the
//! outcome depend on the bias rate.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{default_feature_names, Dataset, GroundTruth};
use crate::error::{Error, Result};

const BETA_S_PATTERN: [f64; 6] = [1.0 / 3.0, -2.0 / 3.0, 1.0, -1.0 / 3.0, 2.0 / 3.0, -1.0];

/// Candidates drawn before the acceptance rate is checked for starvation.
pub const STARVATION_CANDIDATES: usize = 10_000_000;
/// Acceptance rate below which selection gives up.
pub const STARVATION_RATE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphKind {
    SIndepV,
    StoV,
    VtoS,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OutcomeForm {
    #[default]
    Poly,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutcomeSpec {
    pub form: OutcomeForm,
    pub noise_sd: f64,
}

impl Default for OutcomeSpec {
    fn default() -> Self {
        OutcomeSpec {
            form: OutcomeForm::Poly,
            noise_sd: 0.3,
        }
    }
}

impl OutcomeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.noise_sd > 0.0 && self.noise_sd.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "noise_sd must be positive, got {}",
                self.noise_sd
            )))
        }
    }

    /// `g(S)` for one row of stable features.
    pub fn nonlinear_term(&self, s: &[f64]) -> f64 {
        let prod = s[0] * s[1] * s[2];
        match self.form {
            OutcomeForm::Poly => prod,
            OutcomeForm::Exp => prod.exp(),
        }
    }

    /// Noiseless outcome `S b_s + g(S)` for one row of stable features.
    pub fn mean_outcome(&self, s: &[f64]) -> f64 {
        let linear: f64 = s
            .iter()
            .zip(BETA_S_PATTERN.iter().cycle())
            .map(|(x, b)| x * b)
            .sum();
        linear + self.nonlinear_term(s)
    }
}

/// The coefficient pattern `1/3, -2/3, 1, -1/3, 2/3, -1` repeated to length
/// `p_s`.
pub fn beta_s_pattern(p_s: usize) -> Vec<f64> {
    BETA_S_PATTERN.iter().cycle().take(p_s).copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub bias_rate: f64,
    #[serde(default = "default_vb_fraction")]
    pub vb_fraction: f64,
    pub target_n: usize,
}

fn default_vb_fraction() -> f64 {
    0.1
}

impl EnvironmentSpec {
    pub fn new(bias_rate: f64, target_n: usize) -> Self {
        EnvironmentSpec {
            bias_rate,
            vb_fraction: default_vb_fraction(),
            target_n,
        }
    }

    /// Number of biased columns `ceil(vb_fraction * p)`.
    pub fn biased_count(&self, p: usize) -> usize {
        // guard against 0.1 * 30 = 3.0000000000000004
        (self.vb_fraction * p as f64 - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let r = self.bias_rate.abs();
        if !(r > 1.0 && r <= 3.0) {
            return Err(Error::InvalidInput(format!(
                "bias rate must satisfy 1 < |r| <= 3, got {}",
                self.bias_rate
            )));
        }
        let nb = self.biased_count(p);
        if nb < 1 || nb > p / 2 {
            return Err(Error::InvalidInput(format!(
                "vb_fraction {} gives {nb} biased columns out of {} unstable",
                self.vb_fraction,
                p / 2
            )));
        }
        if self.target_n < 2 {
            return Err(Error::InvalidInput("target_n must be at least 2".into()));
        }
        Ok(())
    }
}

/// Acceptance probability `prod_b |r|^(-5 |f - sign(r) v_b|)`.
pub fn selection_probability(f: f64, biased_values: &[f64], r: f64) -> f64 {
    let sign = r.signum();
    let total: f64 = biased_values.iter().map(|v| (f - sign * v).abs()).sum();
    (-5.0 * r.abs().ln() * total).exp()
}

/// Covariates with their stable/unstable split, before an outcome is drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariates {
    pub graph: GraphKind,
    pub x: DMatrix<f64>,
}

impl Covariates {
    pub fn p_s(&self) -> usize {
        self.x.ncols() / 2
    }

    pub fn stable_cols(&self) -> Vec<usize> {
        (0..self.p_s()).collect()
    }

    pub fn unstable_cols(&self) -> Vec<usize> {
        (self.p_s()..self.x.ncols()).collect()
    }
}

fn check_p(p: usize) -> Result<()> {
    if !p.is_multiple_of(2) || p < 6 {
        return Err(Error::InvalidInput(format!(
            "p must be even and at least 6, got {p}"
        )));
    }
    Ok(())
}

/// Draws one covariate row into `row` (length `p`).
fn draw_row<R: Rng>(graph: GraphKind, row: &mut [f64], rng: &mut R) {
    let p = row.len();
    let ps = p / 2;
    let mut normal = || -> f64 { StandardNormal.sample(rng) };
    let (s, v) = row.split_at_mut(ps);
    match graph {
        GraphKind::SIndepV | GraphKind::StoV => {
            let z: Vec<f64> = (0..=ps).map(|_| normal()).collect();
            for j in 0..ps {
                s[j] = 0.8 * z[j] + 0.2 * z[j + 1];
            }
            if graph == GraphKind::SIndepV {
                v.iter_mut().for_each(|x| *x = normal());
            } else {
                for j in 0..ps {
                    v[j] = 0.8 * s[j] + 0.2 * s[(j + 1) % ps] + normal();
                }
            }
        }
        GraphKind::VtoS => {
            v.iter_mut().for_each(|x| *x = normal());
            for j in 0..ps {
                s[j] = 0.2 * v[j] + 0.8 * v[(j + 1) % ps] + normal();
            }
        }
    }
}

/// `n` iid covariate rows from `graph`.
pub fn generate_covariates(graph: GraphKind, n: usize, p: usize, seed: u64) -> Result<Covariates> {
    check_p(p)?;
    if n < 1 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::zeros(n, p);
    let mut row = vec![0.0; p];
    for i in 0..n {
        draw_row(graph, &mut row, &mut rng);
        for (j, v) in row.iter().enumerate() {
            x[(i, j)] = *v;
        }
    }
    Ok(Covariates { graph, x })
}

fn truth_for(p: usize, biased_cols: Vec<usize>, g: Vec<f64>, f: Vec<f64>) -> GroundTruth {
    let ps = p / 2;
    let mut beta_true = beta_s_pattern(ps);
    beta_true.resize(p, 0.0);
    GroundTruth {
        stable_cols: (0..ps).collect(),
        unstable_cols: (ps..p).collect(),
        biased_cols,
        beta_true,
        nonlinear_term: g,
        f_values: f,
    }
}

/// Draws outcomes for `cov` and attaches the ground truth.
pub fn generate_outcome(cov: &Covariates, spec: &OutcomeSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let (n, p) = cov.x.shape();
    check_p(p)?;
    let ps = p / 2;
    let noise = Normal::new(0.0, spec.noise_sd).expect("validated noise_sd");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Vec::with_capacity(n);
    let mut f = Vec::with_capacity(n);
    let mut y = DVector::zeros(n);
    let mut s = vec![0.0; ps];
    for i in 0..n {
        for j in 0..ps {
            s[j] = cov.x[(i, j)];
        }
        g.push(spec.nonlinear_term(&s));
        f.push(spec.mean_outcome(&s));
        y[i] = f[i] + noise.sample(&mut rng);
    }
    Dataset::from_xy(cov.x.clone(), y)?.with_truth(truth_for(p, Vec::new(), g, f))
}

/// Everything needed to draw rows of a synthetic population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDesign {
    pub graph: GraphKind,
    pub p: usize,
    #[serde(default)]
    pub outcome: OutcomeSpec,
}

impl SyntheticDesign {
    pub fn new(graph: GraphKind, p: usize, outcome: OutcomeSpec) -> Self {
        SyntheticDesign { graph, p, outcome }
    }

    pub fn validate(&self) -> Result<()> {
        check_p(self.p)?;
        self.outcome.validate()
    }

    /// `n` rows from the population without any selection.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        let cov = generate_covariates(self.graph, n, self.p, seed)?;
        generate_outcome(&cov, &self.outcome, seed.wrapping_add(0x9e37_79b9_7f4a_7c15))
    }

    /// Biased columns for an environment: the last `ceil(vb_fraction p)`
    /// unstable columns.
    pub fn biased_cols(&self, env: &EnvironmentSpec) -> Vec<usize> {
        let nb = env.biased_count(self.p);
        (self.p - nb..self.p).collect()
    }
}

/// Draws fresh rows from `design` and keeps each with
/// [`selection_probability`] until `env.target_n` rows are accepted.
pub fn select_environment(
    design: &SyntheticDesign,
    env: &EnvironmentSpec,
    seed: u64,
) -> Result<Dataset> {
    design.validate()?;
    env.validate(design.p)?;
    let p = design.p;
    let ps = p / 2;
    let n = env.target_n;
    let biased = design.biased_cols(env);
    let noise = Normal::new(0.0, design.outcome.noise_sd).expect("validated noise_sd");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut x = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    let mut g = Vec::with_capacity(n);
    let mut f = Vec::with_capacity(n);
    let mut row = vec![0.0; p];
    let mut vb = vec![0.0; biased.len()];
    let mut drawn = 0usize;
    let mut accepted = 0usize;
    while accepted < n {
        if drawn >= STARVATION_CANDIDATES && (accepted as f64) < STARVATION_RATE * drawn as f64 {
            return Err(Error::SelectionStarved { accepted, drawn });
        }
        draw_row(design.graph, &mut row, &mut rng);
        let eps = noise.sample(&mut rng);
        let u: f64 = rng.random();
        drawn += 1;
        let fi = design.outcome.mean_outcome(&row[..ps]);
        for (slot, &c) in vb.iter_mut().zip(&biased) {
            *slot = row[c];
        }
        if u < selection_probability(fi, &vb, env.bias_rate) {
            for (j, v) in row.iter().enumerate() {
                x[(accepted, j)] = *v;
            }
            y[accepted] = fi + eps;
            g.push(design.outcome.nonlinear_term(&row[..ps]));
            f.push(fi);
            accepted += 1;
        }
    }
    Dataset::new(x, y, default_feature_names(p))?.with_truth(truth_for(p, biased, g, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pattern_cycles() {
        let b = beta_s_pattern(8);
        assert_eq!(b[6], 1.0 / 3.0);
        assert_eq!(b[7], -2.0 / 3.0);
        assert_eq!(b[2], 1.0);
    }

    #[test]
    fn hand_computed_outcome() {
        let spec = OutcomeSpec::default();
        // 1/3 - 2/3 + 1 - 1/3 + 2/3 = 1, plus g = 1
        assert_abs_diff_eq!(spec.mean_outcome(&[1.0; 5]), 2.0, epsilon = 1e-15);
        // 1/3 - 2/3 + 1 = 2/3, plus g = 1
        let s = [1.0, 1.0, 1.0, 0.0, 0.0];
        assert_abs_diff_eq!(spec.mean_outcome(&s), 5.0 / 3.0, epsilon = 1e-15);
        let exp = OutcomeSpec {
            form: OutcomeForm::Exp,
            ..spec
        };
        let s = [0.3, -1.2, 0.7, 2.0, 0.1];
        let diff = exp.mean_outcome(&s) - spec.mean_outcome(&s);
        let prod = 0.3 * -1.2 * 0.7;
        assert_abs_diff_eq!(diff, f64::exp(prod) - prod, epsilon = 1e-14);
    }

    #[test]
    fn selection_probability_examples() {
        assert_eq!(selection_probability(0.7, &[0.7], 2.0), 1.0);
        assert_abs_diff_eq!(selection_probability(1.0, &[0.0], 2.0), 1.0 / 32.0, epsilon = 1e-15);
        // negative rates flip the sign of v
        assert_eq!(selection_probability(0.7, &[-0.7], -2.0), 1.0);
        // the product runs over all biased columns
        assert_abs_diff_eq!(
            selection_probability(1.0, &[0.0, 0.0], 2.0),
            1.0 / 1024.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn odd_or_small_p_is_rejected() {
        assert!(generate_covariates(GraphKind::SIndepV, 10, 7, 0).is_err());
        assert!(generate_covariates(GraphKind::SIndepV, 10, 4, 0).is_err());
    }

    #[test]
    fn environment_validation() {
        assert!(EnvironmentSpec::new(1.0, 100).validate(10).is_err());
        assert!(EnvironmentSpec::new(-3.5, 100).validate(10).is_err());
        assert!(EnvironmentSpec::new(-3.0, 100).validate(10).is_ok());
        let tiny = EnvironmentSpec {
            vb_fraction: 0.0,
            ..EnvironmentSpec::new(2.0, 100)
        };
        assert!(tiny.validate(10).is_err());
        assert_eq!(EnvironmentSpec::new(2.0, 1).biased_count(30), 3);
    }

    #[test]
    fn last_unstable_column_is_biased() {
        let design = SyntheticDesign::new(GraphKind::SIndepV, 10, OutcomeSpec::default());
        assert_eq!(design.biased_cols(&EnvironmentSpec::new(1.7, 10)), vec![9]);
        let ds = select_environment(&design, &EnvironmentSpec::new(1.7, 50), 3).unwrap();
        let truth = ds.truth().unwrap();
        assert_eq!(truth.biased_cols, vec![9]);
        assert_eq!(ds.n(), 50);
        for i in 0..50 {
            assert_abs_diff_eq!(truth.f_values[i] - ds.y()[i], 0.0, epsilon = 2.0);
        }
    }

    #[test]
    fn unstable_values_do_not_enter_the_outcome() {
        let cov = generate_covariates(GraphKind::StoV, 20, 6, 1).unwrap();
        let mut other = cov.clone();
        for i in 0..20 {
            for j in 3..6 {
                other.x[(i, j)] = 100.0 * (i + j) as f64;
            }
        }
        let spec = OutcomeSpec::default();
        let a = generate_outcome(&cov, &spec, 5).unwrap();
        let b = generate_outcome(&other, &spec, 5).unwrap();
        assert_eq!(a.y(), b.y());
    }
}
