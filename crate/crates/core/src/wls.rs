//! Weighted least squares.

use nalgebra::DVector;

use crate::dataset::{Dataset, WeightVector};
use crate::error::{check_len, Error, Result};
use crate::linalg::{least_squares, scale_rows};

/// Ridge added by [`weighted_least_squares_robust`] when the weighted design
/// is rank deficient.
pub const RIDGE_FALLBACK: f64 = 1e-8;

/// `argmin_b sum_i w_i (y_i - x_i b)^2`, solved by QR on `sqrt(w) X`.
pub fn weighted_least_squares(ds: &Dataset, w: &WeightVector) -> Result<DVector<f64>> {
    solve(ds, w, false)
}

/// Like [`weighted_least_squares`], but retries with a `1e-8 I` ridge
/// instead of failing on a rank-deficient weighted design.
pub fn weighted_least_squares_robust(ds: &Dataset, w: &WeightVector) -> Result<DVector<f64>> {
    solve(ds, w, true)
}

fn solve(ds: &Dataset, w: &WeightVector, fallback: bool) -> Result<DVector<f64>> {
    check_len("weight length", ds.n(), w.len())?;
    if !(w.sum() > 0.0) {
        return Err(Error::InvalidInput("weights sum to zero".into()));
    }
    let root = w.as_vector().map(f64::sqrt);
    let a = scale_rows(ds.x(), &root);
    let rhs = ds.y().component_mul(&root);
    match least_squares(&a, &rhs, None) {
        Err(Error::Singular(_)) if fallback => least_squares(&a, &rhs, Some(RIDGE_FALLBACK)),
        other => other,
    }
}
