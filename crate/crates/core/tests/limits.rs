use dwr_core::baselines::{
    correlation_penalty_matrix, iilasso_fit, lasso_fit, ols_fit, ridge_fit, BaselineKind,
    BaselineSpec,
};
use dwr_core::synthetic::{select_environment, EnvironmentSpec, GraphKind, OutcomeSpec, SyntheticDesign};
use dwr_core::wls::weighted_least_squares;
use dwr_core::{dwr_fit, Dataset, HyperParams, WeightVector};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_data(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::<f64>::from_fn(n, p, |_, _| rng.sample(StandardNormal));
    // mild correlation between the first two columns
    for i in 0..n {
        x[(i, 1)] += 0.5 * x[(i, 0)];
    }
    let beta = DVector::from_fn(p, |j, _| if j % 2 == 0 { 1.0 } else { -0.5 } * (j as f64 + 1.0) / p as f64);
    let y = &x * beta + DVector::from_fn(n, |_, _| 0.3 * rng.sample::<f64, _>(StandardNormal));
    Dataset::from_xy(x, y).unwrap().centered().0
}

#[test]
fn frozen_weights_and_zero_penalties_reduce_to_lasso() {
    for (seed, lambda1) in [(1, 0.01), (2, 0.05), (3, 0.2)] {
        let ds = random_data(200, 5, seed);
        let hp = HyperParams {
            lambda1,
            lambda2: 0.0,
            lambda3: 0.0,
            lambda4: 0.0,
            freeze_weights: true,
            tol: 1e-14,
            max_iters: 50_000,
            ..HyperParams::default()
        };
        let fit = dwr_fit(&ds, &hp).unwrap();
        let lasso = lasso_fit(&ds, lambda1).unwrap();
        let gap = (&fit.beta - &lasso).amax();
        assert!(gap < 1e-3, "lambda1 = {lambda1}: gap {gap}");
        assert!(fit.weights.as_slice().iter().all(|w| *w == 1.0));
    }
}

#[test]
fn uniform_wls_is_ols() {
    for seed in 0..5 {
        let ds = random_data(100, 6, seed);
        let wls = weighted_least_squares(&ds, &WeightVector::uniform(100)).unwrap();
        let ols = ols_fit(&ds).unwrap();
        assert!((wls - ols).amax() < 1e-10);
    }
}

#[test]
fn noiseless_ols_recovers_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = DMatrix::<f64>::from_fn(30, 4, |_, _| rng.sample(StandardNormal));
    let beta = DVector::from_vec(vec![0.5, -1.0, 2.0, 0.0]);
    let ds = Dataset::from_xy(x.clone(), &x * &beta).unwrap();
    assert!((ols_fit(&ds).unwrap() - beta).amax() < 1e-10);
}

#[test]
fn singular_design_is_reported() {
    let x = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 2.0, 4.0, -1.0, -2.0, 0.5, 1.0]);
    let ds = Dataset::from_xy(x, DVector::from_vec(vec![1.0, 0.0, 2.0, 1.0])).unwrap();
    assert!(matches!(ols_fit(&ds), Err(dwr_core::Error::Singular(_))));
}

/// Largest violation of the subgradient conditions of
/// `1/(2n)|y - Xb|^2 + l1 |b|_1 + l2 |b|^T R |b|`.
fn kkt_violation(ds: &Dataset, beta: &DVector<f64>, l1: f64, l2: f64, r: &DMatrix<f64>) -> f64 {
    let n = ds.n() as f64;
    let grad = -ds.x().tr_mul(&(ds.y() - ds.x() * beta)) / n;
    let abs = beta.abs();
    let cross = r * &abs;
    (0..ds.p())
        .map(|j| {
            let pen = l1 + 2.0 * l2 * cross[j];
            if beta[j] != 0.0 {
                (grad[j] + pen * beta[j].signum()).abs()
            } else {
                (grad[j].abs() - pen).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

#[test]
fn lasso_satisfies_subgradient_conditions() {
    for seed in 0..10 {
        let ds = random_data(150, 6, 10 + seed);
        for l1 in [0.001, 0.05, 0.3] {
            let b = lasso_fit(&ds, l1).unwrap();
            let zero = DMatrix::zeros(6, 6);
            let v = kkt_violation(&ds, &b, l1, 0.0, &zero);
            assert!(v < 1e-6, "seed {seed}, lambda1 {l1}: {v}");
        }
    }
}

#[test]
fn iilasso_satisfies_subgradient_conditions() {
    for seed in 0..10 {
        let ds = random_data(150, 6, 20 + seed);
        let r = correlation_penalty_matrix(ds.x()).unwrap();
        for (l1, l2) in [(0.01, 0.01), (0.05, 0.1), (0.1, 1.0)] {
            let b = iilasso_fit(&ds, l1, l2).unwrap();
            let v = kkt_violation(&ds, &b, l1, l2, &r);
            assert!(v < 1e-5, "seed {seed}, ({l1}, {l2}): {v}");
        }
    }
}

#[test]
fn ridge_solves_its_linear_system() {
    for seed in 0..5 {
        let ds = random_data(80, 5, 30 + seed);
        let l = 0.7;
        let b = ridge_fit(&ds, l).unwrap();
        let lhs = (ds.x().tr_mul(ds.x()) + DMatrix::identity(5, 5) * l) * &b;
        let rhs = ds.x().tr_mul(ds.y());
        assert!((lhs - rhs).amax() < 1e-10);
    }
}

#[test]
fn baselines_are_equivariant_under_column_permutation() {
    let ds = random_data(120, 5, 40);
    let perm = [3, 0, 4, 1, 2];
    let xp = ds.x().select_columns(&perm);
    let dp = Dataset::from_xy(xp, ds.y().clone()).unwrap();
    let specs = [
        BaselineSpec::ols(),
        BaselineSpec::new(BaselineKind::Lasso, 0.05, 0.0),
        BaselineSpec::new(BaselineKind::Ridge, 1.0, 0.0),
        BaselineSpec::new(BaselineKind::IiLasso, 0.05, 0.1),
    ];
    for spec in specs {
        let a = spec.fit(&ds).unwrap();
        let b = spec.fit(&dp).unwrap();
        for (k, &j) in perm.iter().enumerate() {
            assert!((a[j] - b[k]).abs() < 1e-9, "{:?}", spec.kind);
        }
    }
}

#[test]
fn learned_weights_reduce_unstable_coefficient_error() {
    // Weighted least squares with decorrelating weights on a biased
    // environment, compared with uniform weights, over a handful of draws.
    let design = SyntheticDesign::new(GraphKind::SIndepV, 10, OutcomeSpec::default());
    let env = EnvironmentSpec::new(1.7, 2000);
    let mut uniform_err = 0.0;
    let mut weighted_err = 0.0;
    for rep in 0..5 {
        let raw = select_environment(&design, &env, 500 + rep).unwrap();
        let (ds, _) = raw.centered();
        let truth = ds.truth().unwrap().clone();
        let w = dwr_core::decorrelation::learn_weights(ds.x(), &HyperParams::default()).unwrap();
        let err = |b: DVector<f64>| {
            dwr_core::metrics::beta_error(b.as_slice(), &truth.beta_true, &truth.unstable_cols).unwrap()
        };
        uniform_err += err(ols_fit(&ds).unwrap());
        weighted_err += err(weighted_least_squares(&ds, &w).unwrap());
    }
    assert!(weighted_err < uniform_err, "{weighted_err} vs {uniform_err}");
}
