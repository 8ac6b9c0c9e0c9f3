use crate::linalg::{self, Matrix};
use crate::{Error, Result};

/// A symmetric positive definite covariance with its precision and lower
/// Cholesky factor cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    matrix: Matrix,
    precision: Matrix,
    chol: Matrix,
    isotropic: Option<f64>,
}

impl Covariance {
    /// `sigma2 * I` with exact precision and factor.
    pub fn isotropic(d: usize, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::invalid(format!("variance must be positive, got {sigma2}")));
        }
        let eye = Matrix::identity(d, d);
        Ok(Self {
            matrix: &eye * sigma2,
            precision: &eye * (1.0 / sigma2),
            chol: &eye * sigma2.sqrt(),
            isotropic: Some(sigma2),
        })
    }

    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid("covariance must be square"));
        }
        let matrix = linalg::symmetrize(m);
        let chol = linalg::cholesky(&matrix, "covariance")?;
        let precision = linalg::symmetrize(&chol.inverse());
        Ok(Self { chol: chol.l(), matrix, precision, isotropic: None })
    }

    /// Builds from a precision matrix.
    pub fn from_precision(p: &Matrix) -> Result<Self> {
        let chol = linalg::cholesky(p, "precision")?;
        let matrix = linalg::symmetrize(&chol.inverse());
        let cov_chol = linalg::cholesky(&matrix, "covariance")?;
        Ok(Self { chol: cov_chol.l(), matrix, precision: linalg::symmetrize(p), isotropic: None })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn precision(&self) -> &Matrix {
        &self.precision
    }

    /// Lower-triangular `L` with `L Lᵀ = Σ`.
    pub fn chol_lower(&self) -> &Matrix {
        &self.chol
    }

    pub fn isotropic_variance(&self) -> Option<f64> {
        self.isotropic
    }

    /// Largest eigenvalue; equals the scalar variance for isotropic forms.
    pub fn max_variance(&self) -> f64 {
        self.isotropic.unwrap_or_else(|| linalg::max_eigenvalue(&self.matrix))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn isotropic_parts_are_exact() {
        let c = Covariance::isotropic(2, 4.0).unwrap();
        assert_eq!(c.precision()[(0, 0)], 0.25);
        assert_eq!(c.chol_lower()[(1, 1)], 2.0);
        assert_eq!(c.max_variance(), 4.0);
    }

    #[test]
    fn full_matrix_is_symmetric_and_factored() {
        let c = Covariance::from_matrix(&dmatrix![2.0, 0.5; 0.5 + 1e-14, 1.0]).unwrap();
        let m = c.matrix();
        assert_eq!(m[(0, 1)], m[(1, 0)]);
        let l = c.chol_lower();
        assert!((l * l.transpose() - m).abs().max() < 1e-12);
        assert!((m * c.precision() - Matrix::identity(2, 2)).abs().max() < 1e-12);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(Covariance::isotropic(2, 0.0).is_err());
        assert!(Covariance::from_matrix(&dmatrix![1.0, 0.0; 0.0, -2.0]).is_err());
    }
}
