//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Diagonal jitter added once when a Cholesky factorisation fails.
pub const JITTER: f64 = 1e-10;

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Symmetrizes `m` and factors it, retrying once with [`JITTER`] on the diagonal.
pub fn cholesky(m: &Matrix, what: &'static str) -> Result<Cholesky<f64, Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    let s = symmetrize(m);
    if let Some(c) = Cholesky::new(s.clone()) {
        return Ok(c);
    }
    let n = s.nrows();
    Cholesky::new(s + Matrix::identity(n, n) * JITTER).ok_or(Error::NotPositiveDefinite(what))
}

/// Inverse of a symmetric positive definite matrix, returned symmetric.
pub fn spd_inverse(m: &Matrix, what: &'static str) -> Result<Matrix> {
    Ok(symmetrize(&cholesky(m, what)?.inverse()))
}

pub fn min_eigenvalue(m: &Matrix) -> f64 {
    symmetrize(m).symmetric_eigenvalues().min()
}

pub fn max_eigenvalue(m: &Matrix) -> f64 {
    symmetrize(m).symmetric_eigenvalues().max()
}

pub fn is_zero(m: &Matrix) -> bool {
    m.iter().all(|&v| v == 0.0)
}

pub fn standard_normal(d: usize, rng: &mut impl Rng) -> Vector {
    Vector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

/// Draws `mean + chol * z` with `z` standard normal.
pub fn sample_gaussian(mean: &Vector, chol_lower: &Matrix, rng: &mut impl Rng) -> Vector {
    let z = standard_normal(mean.len(), rng);
    mean + chol_lower * z
}

/// Frobenius norm of `a - b` relative to the norm of `b`.
pub fn frobenius_rel(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

pub fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Sample mean and unbiased covariance of a set of vectors.
pub fn mean_and_covariance(samples: &[Vector]) -> (Vector, Matrix) {
    let n = samples.len();
    let d = samples.first().map_or(0, |s| s.len());
    let mut mean = Vector::zeros(d);
    for s in samples {
        mean += s;
    }
    mean /= n.max(1) as f64;
    let mut cov = Matrix::zeros(d, d);
    for s in samples {
        let c = s - &mean;
        cov.ger(1.0, &c, &c, 1.0);
    }
    cov /= (n.max(2) - 1) as f64;
    (mean, cov)
}
