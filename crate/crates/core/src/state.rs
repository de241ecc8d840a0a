use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::check_psd;
use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::tolerance::Tolerance;

/// Density operator: PSD with unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct State<T> {
    matrix: Matrix<T>,
}

impl<T: Real> State<T> {
    pub fn new(matrix: Matrix<T>, tol: Tolerance<T>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState(format!("{}x{} is not square", matrix.rows(), matrix.cols())));
        }
        check_psd(&matrix, tol).map_err(|e| Error::InvalidState(e.to_string()))?;
        let tr = matrix.trace();
        if (tr - Complex::new(T::one(), T::zero())).norm() > tol.eps {
            return Err(Error::InvalidState(format!("trace {} != 1", tr.re)));
        }
        Ok(Self { matrix })
    }

    /// `|ψ><ψ| / <ψ|ψ>`
    pub fn pure(psi: &[Complex<T>]) -> Result<Self> {
        let norm = psi.iter().fold(T::zero(), |s, z| s + z.norm_sqr());
        if norm <= T::zero() || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        Ok(Self { matrix: Matrix::projector(psi).scale_real(T::one() / norm) })
    }

    /// `|k><k|` in dimension `n`.
    pub fn basis(n: usize, k: usize) -> Self {
        assert!(k < n, "basis index {k} out of range for dimension {n}");
        let mut m = Matrix::zeros(n, n);
        m[(k, k)] = Complex::new(T::one(), T::zero());
        Self { matrix: m }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self { matrix: Matrix::identity(n).scale_real(T::one() / T::lit(n as f64)) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.matrix
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { matrix: self.matrix.kron(&other.matrix) }
    }
}
