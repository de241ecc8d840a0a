//! Tensor-factor bookkeeping and partial traces.
//!
//! Composite indices follow the Kronecker convention: factor indices
//! `(i_1, …, i_n)` map to `i_1·m_2⋯m_n + … + i_n`.

use std::fmt;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{mismatch, Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

/// Ordered factor dimensions `m_1, …, m_n` of `H_1 ⊗ ⋯ ⊗ H_n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FactorDims(Vec<usize>);

impl FactorDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Factors("no factors".into()));
        }
        if dims.contains(&0) {
            return Err(Error::Factors(format!("zero-dimensional factor in {dims:?}")));
        }
        Ok(Self(dims))
    }

    pub fn single(m: usize) -> Self {
        Self::new(vec![m]).expect("positive dimension")
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().product()
    }

    /// Product of every factor except `keep`.
    pub fn others(&self, keep: usize) -> usize {
        self.0.iter().enumerate().filter(|&(k, _)| k != keep).map(|(_, m)| m).product()
    }

    /// Row-major strides: `stride[k] = m_{k+1} ⋯ m_n`.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.0.len()];
        for k in (0..self.0.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.0[k + 1];
        }
        s
    }

    pub fn split(&self, index: usize) -> Vec<usize> {
        self.strides().iter().zip(&self.0).map(|(s, m)| (index / s) % m).collect()
    }

    pub fn join(&self, digits: &[usize]) -> usize {
        self.strides().iter().zip(digits).map(|(s, d)| s * d).sum()
    }

    pub fn check(&self, side: usize) -> Result<()> {
        if self.total() != side {
            return Err(mismatch(format!("side {} from factors {self}", self.total()), side));
        }
        Ok(())
    }
}

impl fmt::Display for FactorDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Traces out the factors listed in `traced` (0-based), keeping the others in order.
///
/// The traced set must be a proper subset; tracing everything is `Matrix::trace`.
pub fn partial_trace<T: Real>(m: &Matrix<T>, dims: &FactorDims, traced: &[usize]) -> Result<Matrix<T>> {
    if !m.is_square() {
        return Err(Error::Shape(format!("partial trace of {}x{} matrix", m.rows(), m.cols())));
    }
    dims.check(m.rows())?;
    let n = dims.len();
    let mut is_traced = vec![false; n];
    for &k in traced {
        if k >= n {
            return Err(Error::Factors(format!("factor {k} out of range for {n} factors")));
        }
        is_traced[k] = true;
    }
    if is_traced.iter().all(|&t| t) {
        return Err(Error::Factors("cannot trace out every factor; use the full trace".into()));
    }
    let kept: Vec<usize> = (0..n).filter(|&k| !is_traced[k]).collect();
    let gone: Vec<usize> = (0..n).filter(|&k| is_traced[k]).collect();
    let kept_dims = FactorDims::new(kept.iter().map(|&k| dims.0[k]).collect())?;
    let strides = dims.strides();
    let gone_count: usize = gone.iter().map(|&k| dims.0[k]).product();
    let gone_dims = gone.iter().map(|&k| dims.0[k]).collect::<Vec<_>>();

    // offset of each kept index and each traced index in the composite space
    let offset = |factors: &[usize], local: &[usize], digits_of: usize| -> usize {
        let mut rem = digits_of;
        let mut off = 0;
        for (pos, &k) in factors.iter().enumerate().rev() {
            off += (rem % local[pos]) * strides[k];
            rem /= local[pos];
        }
        off
    };
    let side = kept_dims.total();
    let kept_offsets: Vec<usize> = (0..side).map(|r| offset(&kept, kept_dims.dims(), r)).collect();
    let gone_offsets: Vec<usize> =
        if gone.is_empty() { vec![0] } else { (0..gone_count).map(|t| offset(&gone, &gone_dims, t)).collect() };

    Ok(Matrix::from_fn(side, side, |r, c| {
        gone_offsets.iter().fold(Complex::zero(), |acc, g| acc + m[(kept_offsets[r] + g, kept_offsets[c] + g)])
    }))
}

/// Traces out every factor except `keep`.
pub fn reduce_to<T: Real>(m: &Matrix<T>, dims: &FactorDims, keep: usize) -> Result<Matrix<T>> {
    if keep >= dims.len() {
        return Err(Error::Factors(format!("factor {keep} out of range for {} factors", dims.len())));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|&k| k != keep).collect();
    partial_trace(m, dims, &traced)
}

/// Kraus operators `{⟨t| ⊗ I_keep}` of the channel that traces out every factor
/// except `keep`; each is `m_keep × total`.
pub fn reduction_kraus<T: Real>(dims: &FactorDims, keep: usize) -> Result<Vec<Matrix<T>>> {
    if keep >= dims.len() {
        return Err(Error::Factors(format!("factor {keep} out of range for {} factors", dims.len())));
    }
    let m_keep = dims.0[keep];
    let total = dims.total();
    let others: Vec<usize> = (0..dims.len()).filter(|&k| k != keep).collect();
    let other_dims =
        FactorDims::new(if others.is_empty() { vec![1] } else { others.iter().map(|&k| dims.0[k]).collect() })?;
    let mut out = Vec::with_capacity(other_dims.total());
    for t in 0..other_dims.total() {
        let t_digits = other_dims.split(t);
        let mut k = Matrix::zeros(m_keep, total);
        for a in 0..m_keep {
            let mut digits = vec![0; dims.len()];
            digits[keep] = a;
            for (pos, &f) in others.iter().enumerate() {
                digits[f] = t_digits[pos];
            }
            k[(a, dims.join(&digits))] = Complex::one();
        }
        out.push(k);
    }
    Ok(out)
}
