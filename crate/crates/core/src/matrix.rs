//! Dense row-major complex matrices.
//!
//! Operator overloads (`&a + &b`, `&a * &b`) panic on non-conformable shapes,
//! like slicing does. Callers that take shapes from user input go through the
//! checked variants or validate dimensions first.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{mismatch, Error, Result};
use crate::scalar::{cr, Real};

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> Matrix<T> {
    /// Builds a matrix from row-major entries, rejecting empty shapes,
    /// length mismatches and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("{rows}x{cols} has no entries")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{rows}x{cols} needs {} entries, got {}", rows * cols, data.len())));
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { row: k / cols, col: k % cols });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<Complex<T>>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::Shape(format!("ragged rows: {} vs {}", bad.len(), m)));
        }
        Self::new(n, m, rows.into_iter().flatten().collect())
    }

    /// Real matrix from nested rows; handy in tests and examples.
    pub fn real(rows: &[&[f64]]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| cr(T::lit(x))).collect()).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix shape");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| Complex::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Complex::one() } else { Complex::zero() })
    }

    pub fn diag(values: &[T]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { cr(values[i]) } else { Complex::zero() })
    }

    /// `|v><v|`
    pub fn projector(v: &[Complex<T>]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| v[i] * v[j].conj())
    }

    /// `|u><v|` with `u` of length `rows`, `v` of length `cols`.
    pub fn outer(u: &[Complex<T>], v: &[Complex<T>]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    /// Matrix unit `E_kl`: one at `(k, l)`, zero elsewhere.
    pub fn unit(n: usize, k: usize, l: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(k, l)] = Complex::one();
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn map<U: Real>(&self, f: impl Fn(Complex<T>) -> Complex<U>) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    /// Converts to another scalar precision.
    pub fn cast<U: Real>(&self) -> Matrix<U> {
        self.map(|z| Complex::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64())))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> Complex<T> {
        assert!(self.is_square(), "trace of non-square {}x{} matrix", self.rows, self.cols);
        (0..self.rows).fold(Complex::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.map(|z| z * s)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(mismatch(format!("{} rows on the right", self.cols), format!("{}x{}", other.rows, other.cols)));
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![Complex::zero(); n * m];
        for i in 0..n {
            for l in 0..k {
                let a = self.data[i * k + l];
                if a.is_zero() {
                    continue;
                }
                let brow = &other.data[l * m..(l + 1) * m];
                for (o, b) in out[i * m..(i + 1) * m].iter_mut().zip(brow) {
                    *o = *o + a * b;
                }
            }
        }
        Ok(Self { rows: n, cols: m, data: out })
    }

    /// Kronecker product, leftmost factor most significant:
    /// `(a ⊗ b)[i·rb + k, j·cb + l] = a[i, j]·b[k, l]`.
    pub fn kron(&self, other: &Self) -> Self {
        let (rb, cb) = other.shape();
        Self::from_fn(self.rows * rb, self.cols * cb, |r, c| self[(r / rb, c / cb)] * other[(r % rb, c % cb)])
    }

    /// `X·Y − Y·X`
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// `(M + M*)/2`
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.worst(z.norm()))
    }

    /// Largest absolute entry of `self − other`; infinite for different shapes.
    pub fn deviation(&self, other: &Self) -> T {
        if self.shape() != other.shape() {
            return T::infinity();
        }
        self.data.iter().zip(&other.data).fold(T::zero(), |m, (a, b)| m.worst((a - b).norm()))
    }

    pub fn approx_eq(&self, other: &Self, eps: T) -> bool {
        self.deviation(other) <= eps
    }

    pub fn hermitian_deviation(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let mut dev = T::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.worst((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Deviation from the nearest multiple of the identity, `λ = tr(M)/n`.
    pub fn scalar_part(&self) -> (Complex<T>, T) {
        let n = T::lit(self.rows as f64);
        let lambda = self.trace() / n;
        let dev = self.deviation(&Self::identity(self.rows).scale(lambda));
        (lambda, dev)
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(mismatch(format!("{}x{}", self.rows, self.cols), format!("{}x{}", other.rows, other.cols)));
        }
        Ok(())
    }
}

/// Left fold of Kronecker products, `((m0 ⊗ m1) ⊗ m2) ⊗ …`.
pub fn kron_all<'a, T: Real>(factors: impl IntoIterator<Item = &'a Matrix<T>>) -> Option<Matrix<T>> {
    factors.into_iter().fold(None, |acc: Option<Matrix<T>>, m| Some(acc.map_or_else(|| m.clone(), |a| a.kron(m))))
}

/// Sum of equally shaped matrices, accumulated left to right.
pub fn sum_all<'a, T: Real>(terms: impl IntoIterator<Item = &'a Matrix<T>>) -> Option<Matrix<T>> {
    let mut acc: Option<Matrix<T>> = None;
    for m in terms {
        match acc.as_mut() {
            None => acc = Some(m.clone()),
            Some(a) => *a += m,
        }
    }
    acc
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Add for &Matrix<T> {
    type Output = Matrix<T>;

    fn add(self, rhs: Self) -> Matrix<T> {
        self.checked_add(rhs).expect("matrix add")
    }
}

impl<T: Real> Sub for &Matrix<T> {
    type Output = Matrix<T>;

    fn sub(self, rhs: Self) -> Matrix<T> {
        self.checked_sub(rhs).expect("matrix sub")
    }
}

impl<T: Real> Mul for &Matrix<T> {
    type Output = Matrix<T>;

    fn mul(self, rhs: Self) -> Matrix<T> {
        self.checked_mul(rhs).expect("matrix multiply")
    }
}

impl<T: Real> Neg for &Matrix<T> {
    type Output = Matrix<T>;

    fn neg(self) -> Matrix<T> {
        self.map(|z| -z)
    }
}

impl<T: Real> AddAssign<&Matrix<T>> for Matrix<T> {
    fn add_assign(&mut self, rhs: &Matrix<T>) {
        assert_eq!(self.shape(), rhs.shape(), "matrix add-assign shape");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a = *a + b;
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for row in self.data.chunks(self.cols) {
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}
