//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};

/// `X^T diag(w) X`.
pub fn weighted_gram(x: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let xw = scale_rows(x, w);
    xw.tr_mul(x)
}

/// Multiplies row `i` of `x` by `s[i]`.
pub fn scale_rows(x: &DMatrix<f64>, s: &DVector<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        col.component_mul_assign(s);
    }
    out
}

/// Least-squares solution of `a b ~ rhs` by Householder QR.
///
/// With `ridge = Some(eps)` the system is augmented with `sqrt(eps) I`
/// rows, which solves `(a^T a + eps I) b = a^T rhs` and never fails on
/// rank deficiency.
pub fn least_squares(
    a: &DMatrix<f64>,
    rhs: &DVector<f64>,
    ridge: Option<f64>,
) -> Result<DVector<f64>> {
    check_len("right-hand side length", a.nrows(), rhs.len())?;
    let p = a.ncols();
    let (a, rhs) = match ridge {
        Some(eps) if eps > 0.0 => {
            let mut aug = DMatrix::zeros(a.nrows() + p, p);
            aug.rows_mut(0, a.nrows()).copy_from(a);
            aug.rows_mut(a.nrows(), p)
                .copy_from(&(DMatrix::identity(p, p) * eps.sqrt()));
            let mut r = DVector::zeros(a.nrows() + p);
            r.rows_mut(0, a.nrows()).copy_from(rhs);
            (aug, r)
        }
        _ => (a.clone(), rhs.clone()),
    };
    if a.nrows() < p {
        return Err(Error::Singular(format!(
            "{} rows cannot determine {p} coefficients",
            a.nrows()
        )));
    }
    let rows = a.nrows();
    let qr = a.qr();
    let r = qr.r();
    let max_diag = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = max_diag * f64::EPSILON * (rows.max(p) as f64);
    if let Some(j) = (0..p).find(|&j| r[(j, j)].abs() <= tol) {
        return Err(Error::Singular(format!(
            "design is rank deficient (column {j} is linearly dependent)"
        )));
    }
    let qtb = qr.q().tr_mul(&rhs);
    r.solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))
}

/// Solves a symmetric positive definite system by Cholesky.
pub fn solve_spd(a: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    check_len("right-hand side length", a.nrows(), rhs.len())?;
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("matrix is not positive definite".into()))?;
    Ok(chol.solve(rhs))
}

/// Largest eigenvalue of a symmetric matrix.
pub fn largest_eigenvalue(sym: &DMatrix<f64>) -> f64 {
    sym.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::NEG_INFINITY, |m, v| m.max(*v))
}
