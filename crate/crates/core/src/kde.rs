//! Density-ratio weights from Gaussian kernel density estimates.
//!
//! `w_i = prod_j f_j(x_ij) / f(x_i)`: the product of the marginal densities
//! over the joint density, both estimated with Gaussian kernels and the same
//! per-coordinate bandwidths (diagonal bandwidth matrix for the joint).
//! Reweighting by this ratio turns the joint distribution into the product of
//! its marginals as `n` grows, so it drives the decorrelation loss to zero.
//! It costs `O(n^2 p)` and is meant as a reference for [`crate::decorrelation`].

use nalgebra::{DMatrix, DVector};

use crate::dataset::WeightVector;
use crate::error::{check_len, Error, Result};

/// Joint density estimates below this are floored.
pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct KdeWeights {
    /// Density-ratio weights rescaled to mean one.
    pub weights: WeightVector,
    /// Number of samples whose joint density hit the floor.
    pub floored: usize,
}

impl KdeWeights {
    pub fn hit_floor(&self) -> bool {
        self.floored > 0
    }
}

/// Silverman's rule of thumb `1.06 * sd * n^(-1/5)` per column.
pub fn silverman_bandwidths(x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InvalidInput("bandwidth selection needs n >= 2".into()));
    }
    let factor = 1.06 * (n as f64).powf(-0.2);
    x.column_iter()
        .enumerate()
        .map(|(j, col)| {
            let sd = col.variance().sqrt() * (n as f64 / (n as f64 - 1.0)).sqrt();
            if sd > 0.0 && sd.is_finite() {
                Ok(factor * sd)
            } else {
                Err(Error::DegenerateColumn { column: j })
            }
        })
        .collect()
}

/// Density-ratio weights with the given bandwidths and joint-density floor.
pub fn kde_oracle_weights_with_floor(
    x: &DMatrix<f64>,
    bandwidths: &[f64],
    floor: f64,
) -> Result<KdeWeights> {
    let (n, p) = x.shape();
    check_len("bandwidth count", p, bandwidths.len())?;
    if let Some(h) = bandwidths.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
        return Err(Error::InvalidInput(format!("bandwidth {h} is not positive")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("no samples".into()));
    }

    // The 1/(sqrt(2 pi) h_j) normalisers appear once per coordinate in both
    // numerator and denominator and cancel; so does the 1/n.
    let inv_h: Vec<f64> = bandwidths.iter().map(|h| 1.0 / h).collect();
    let mut marginal = DMatrix::<f64>::zeros(n, p);
    let mut joint = DVector::<f64>::zeros(n);
    let mut k = vec![0.0; p];
    for i in 0..n {
        // self pair
        for j in 0..p {
            marginal[(i, j)] += 1.0;
        }
        joint[i] += 1.0;
        for l in (i + 1)..n {
            let mut prod = 1.0;
            for j in 0..p {
                let u = (x[(i, j)] - x[(l, j)]) * inv_h[j];
                k[j] = (-0.5 * u * u).exp();
                prod *= k[j];
            }
            for j in 0..p {
                marginal[(i, j)] += k[j];
                marginal[(l, j)] += k[j];
            }
            joint[i] += prod;
            joint[l] += prod;
        }
    }

    let scale = (n as f64).powi(p as i32 - 1);
    let mut floored = 0;
    let raw = DVector::from_fn(n, |i, _| {
        let numer: f64 = marginal.row(i).iter().product();
        let mut denom = joint[i] * scale;
        if !(denom >= floor) {
            denom = floor;
            floored += 1;
        }
        numer / denom
    });
    if raw.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidInput(
            "density ratio overflowed; use larger bandwidths".into(),
        ));
    }
    let weights = WeightVector::new(raw)?.normalized();
    Ok(KdeWeights { weights, floored })
}

/// Density-ratio weights with [`DEFAULT_DENSITY_FLOOR`].
pub fn kde_oracle_weights(x: &DMatrix<f64>, bandwidths: &[f64]) -> Result<KdeWeights> {
    kde_oracle_weights_with_floor(x, bandwidths, DEFAULT_DENSITY_FLOOR)
}
