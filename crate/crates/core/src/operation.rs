//! Completely positive trace non-increasing maps in Kraus form.

use crate::error::{mismatch, Error, Result};
use crate::linalg::eigh;
use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::tolerance::Tolerance;

/// `J(B) = Σ_i K_i B K_i*` with `K_i: H_in → H_out` and `Σ_i K_i* K_i ≤ I`.
///
/// Complete positivity holds by construction. Kraus lists are kept exactly as
/// built; two operations are compared extensionally via [`Operation::deviation`].
#[derive(Clone, Debug, PartialEq)]
pub struct Operation<T> {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<Matrix<T>>,
}

impl<T: Real> Operation<T> {
    pub fn new(kraus: Vec<Matrix<T>>, tol: Tolerance<T>) -> Result<Self> {
        let op = Self::from_kraus(kraus)?;
        let top = eigh(&op.kraus_gram())?.max();
        if top.is_nan() || top > T::one() + tol.eps {
            return Err(Error::NotTraceNonIncreasing { eigenvalue: top.as_f64() });
        }
        Ok(op)
    }

    /// Shape checks only; trace non-increase is the caller's responsibility.
    pub(crate) fn from_kraus(kraus: Vec<Matrix<T>>) -> Result<Self> {
        let first = kraus.first().ok_or(Error::Empty("Kraus operators"))?;
        let (out_dim, in_dim) = first.shape();
        if let Some(k) = kraus.iter().find(|k| k.shape() != (out_dim, in_dim)) {
            return Err(mismatch(format!("{out_dim}x{in_dim} Kraus operator"), format!("{}x{}", k.rows(), k.cols())));
        }
        Ok(Self { in_dim, out_dim, kraus })
    }

    pub fn identity(n: usize) -> Self {
        Self { in_dim: n, out_dim: n, kraus: vec![Matrix::identity(n)] }
    }

    pub fn zero(in_dim: usize, out_dim: usize) -> Self {
        Self { in_dim, out_dim, kraus: vec![Matrix::zeros(out_dim, in_dim)] }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus(&self) -> &[Matrix<T>] {
        &self.kraus
    }

    /// `Σ K_i* K_i`
    pub fn kraus_gram(&self) -> Matrix<T> {
        let mut g = Matrix::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus {
            g += &(&k.adjoint() * k);
        }
        g
    }

    pub fn is_channel(&self, tol: Tolerance<T>) -> bool {
        tol.accepts(self.kraus_gram().deviation(&Matrix::identity(self.in_dim)))
    }

    /// `Σ K_i B K_i*`
    pub fn apply(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        if b.shape() != (self.in_dim, self.in_dim) {
            return Err(mismatch(format!("{0}x{0} input", self.in_dim), format!("{}x{}", b.rows(), b.cols())));
        }
        let mut out = Matrix::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus {
            out += &(&(k * b) * &k.adjoint());
        }
        Ok(out)
    }

    /// Dual map `Σ K_i* C K_i`.
    pub fn dual_apply(&self, c: &Matrix<T>) -> Result<Matrix<T>> {
        if c.shape() != (self.out_dim, self.out_dim) {
            return Err(mismatch(format!("{0}x{0} input", self.out_dim), format!("{}x{}", c.rows(), c.cols())));
        }
        let mut out = Matrix::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus {
            out += &(&(&k.adjoint() * c) * k);
        }
        Ok(out)
    }

    /// The unique effect measured: `J*(I)`.
    pub fn measured_effect(&self) -> Matrix<T> {
        self.kraus_gram()
    }

    /// `next ∘ self`, Kraus operators `L_j K_i`.
    pub fn then(&self, next: &Self) -> Result<Self> {
        if next.in_dim != self.out_dim {
            return Err(mismatch(format!("next input dimension {}", self.out_dim), next.in_dim));
        }
        let kraus = next.kraus.iter().flat_map(|l| self.kraus.iter().map(move |k| l * k)).collect();
        Self::from_kraus(kraus)
    }

    /// `self ⊗ other`, Kraus operators `K_i ⊗ L_j`.
    pub fn tensor(&self, other: &Self) -> Self {
        let kraus = self.kraus.iter().flat_map(|k| other.kraus.iter().map(move |l| k.kron(l))).collect();
        Self { in_dim: self.in_dim * other.in_dim, out_dim: self.out_dim * other.out_dim, kraus }
    }

    /// Sum of operations: union of the Kraus families, in order.
    pub fn sum<'a>(ops: impl IntoIterator<Item = &'a Self>) -> Result<Self>
    where
        T: 'a,
    {
        Self::from_kraus(ops.into_iter().flat_map(|o| o.kraus.iter().cloned()).collect())
    }

    /// Largest entry deviation of `self(E_kl) − other(E_kl)` over all matrix units;
    /// infinite when the dimensions differ. Matrix units span `L(H)`, so this
    /// vanishes exactly when the two maps agree.
    pub fn deviation(&self, other: &Self) -> T {
        if self.in_dim != other.in_dim || self.out_dim != other.out_dim {
            return T::infinity();
        }
        let mut worst = T::zero();
        for k in 0..self.in_dim {
            for l in 0..self.in_dim {
                let e = Matrix::unit(self.in_dim, k, l);
                let a = self.apply(&e).expect("shape");
                let b = other.apply(&e).expect("shape");
                worst = worst.worst(a.deviation(&b));
            }
        }
        worst
    }
}
