use dwr_core::decorrelation::{
    decorrelation_gradient, decorrelation_loss, weight_objective, weight_objective_gradient,
};
use dwr_core::{total_objective, total_objective_gradient, Dataset, HyperParams, WeightVector};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const H: f64 = 1e-5;
const REL_TOL: f64 = 1e-5;

fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
}

fn positive_weights(rng: &mut ChaCha8Rng, n: usize) -> WeightVector {
    WeightVector::new(DVector::from_fn(n, |_, _| rng.random_range(0.2..2.0))).unwrap()
}

/// The loss written out term by term: for each column, zero that column in a
/// copy of x and compare the weighted cross moment with the product of
/// weighted means.
fn literal_loss(x: &DMatrix<f64>, w: &[f64]) -> f64 {
    let (n, p) = x.shape();
    let nf = n as f64;
    let mut total = 0.0;
    for j in 0..p {
        let mut minus = x.clone();
        minus.column_mut(j).fill(0.0);
        let mean_j: f64 = (0..n).map(|i| x[(i, j)] * w[i]).sum::<f64>() / nf;
        for k in 0..p {
            let cross: f64 = (0..n).map(|i| x[(i, j)] * w[i] * minus[(i, k)]).sum::<f64>() / nf;
            let mean_k: f64 = (0..n).map(|i| minus[(i, k)] * w[i]).sum::<f64>() / nf;
            total += (cross - mean_j * mean_k).powi(2);
        }
    }
    total
}

fn central_difference(f: impl Fn(&[f64]) -> f64, at: &[f64]) -> Vec<f64> {
    let mut point = at.to_vec();
    (0..at.len())
        .map(|i| {
            let orig = point[i];
            point[i] = orig + H;
            let up = f(&point);
            point[i] = orig - H;
            let down = f(&point);
            point[i] = orig;
            (up - down) / (2.0 * H)
        })
        .collect()
}

/// Componentwise relative error, with entries far below the gradient's scale
/// compared against that scale instead of their own magnitude.
fn assert_close(analytic: &[f64], numeric: &[f64], what: &str) {
    let scale = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs())) * 1e-3;
    for (i, (a, f)) in analytic.iter().zip(numeric).enumerate() {
        let denom = a.abs().max(f.abs()).max(scale).max(1e-12);
        let rel = (a - f).abs() / denom;
        assert!(rel < REL_TOL, "{what}[{i}]: analytic {a}, numeric {f}, rel {rel}");
    }
}

fn random_instance(rng: &mut ChaCha8Rng) -> (DMatrix<f64>, WeightVector) {
    let n = rng.random_range(5..=50);
    let p = rng.random_range(2..=5);
    let x = gaussian_matrix(rng, n, p);
    let w = positive_weights(rng, n);
    (x, w)
}

#[test]
fn loss_matches_literal_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let (x, w) = random_instance(&mut rng);
        let fast = decorrelation_loss(&x, &w).unwrap();
        let slow = literal_loss(&x, w.as_slice());
        assert!((fast - slow).abs() <= 1e-12 * slow.max(1.0), "{fast} vs {slow}");
    }
}

#[test]
fn hand_evaluated_losses() {
    let x = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, -1.0]);
    assert_eq!(literal_loss(&x, &[1.0, 1.0]), 2.0);
    assert_eq!(decorrelation_loss(&x, &WeightVector::uniform(2)).unwrap(), 2.0);
}

#[test]
fn decorrelation_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let (x, w) = random_instance(&mut rng);
        let analytic = decorrelation_gradient(&x, &w).unwrap();
        let numeric = central_difference(|v| literal_loss(&x, v), w.as_slice());
        assert_close(analytic.as_slice(), &numeric, "dL_B/dw");
    }
}

#[test]
fn fixed_six_by_three_instance() {
    let mut rng = ChaCha8Rng::seed_from_u64(63);
    let x = gaussian_matrix(&mut rng, 6, 3);
    let w = positive_weights(&mut rng, 6);
    let analytic = decorrelation_gradient(&x, &w).unwrap();
    let numeric = central_difference(|v| literal_loss(&x, v), w.as_slice());
    assert_close(analytic.as_slice(), &numeric, "dL_B/dw");
}

#[test]
fn gradient_is_even_in_x() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (x, w) = random_instance(&mut rng);
    let a = decorrelation_gradient(&x, &w).unwrap();
    let b = decorrelation_gradient(&(-&x), &w).unwrap();
    assert_eq!(a, b);
}

fn random_hyper(rng: &mut ChaCha8Rng) -> HyperParams {
    HyperParams {
        lambda1: rng.random_range(0.0..0.5),
        lambda2: rng.random_range(0.0..20.0),
        lambda3: rng.random_range(0.0..1.0),
        lambda4: rng.random_range(0.0..50.0),
        ..HyperParams::default()
    }
}

#[test]
fn weight_objective_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let (x, w) = random_instance(&mut rng);
        let hp = random_hyper(&mut rng);
        let analytic = weight_objective_gradient(&x, &w, &hp).unwrap();
        let numeric = central_difference(
            |v| weight_objective(&x, &WeightVector::new(DVector::from_column_slice(v)).unwrap(), &hp).unwrap(),
            w.as_slice(),
        );
        assert_close(analytic.as_slice(), &numeric, "dweight_objective/dw");
    }
}

#[test]
fn total_objective_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let (x, w) = random_instance(&mut rng);
        let (n, p) = x.shape();
        let y = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
        let ds = Dataset::from_xy(x, y).unwrap();
        let hp = random_hyper(&mut rng);
        // keep every coefficient away from the kink of |b|
        let beta = DVector::from_fn(p, |_, _| {
            let m: f64 = rng.random_range(0.1..1.5);
            if rng.random_bool(0.5) {
                m
            } else {
                -m
            }
        });
        let (gw, gb) = total_objective_gradient(&ds, &w, &beta, &hp).unwrap();

        let nw = central_difference(
            |v| {
                let w = WeightVector::new(DVector::from_column_slice(v)).unwrap();
                total_objective(&ds, &w, &beta, &hp).unwrap()
            },
            w.as_slice(),
        );
        assert_close(gw.as_slice(), &nw, "dJ/dw");

        let nb = central_difference(
            |v| total_objective(&ds, &w, &DVector::from_column_slice(v), &hp).unwrap(),
            beta.as_slice(),
        );
        assert_close(gb.as_slice(), &nb, "dJ/db");
    }
}
