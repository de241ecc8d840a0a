//! Hermitian eigendecomposition by cyclic complex Jacobi rotations, and the
//! spectral functions built on it.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{EffectViolation, Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{cr, Real};
use crate::tolerance::Tolerance;

const MAX_SWEEPS: usize = 100;

/// `h = V · diag(values) · V*` with eigenvalues ascending and orthonormal columns in `V`.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn max(&self) -> T {
        self.values[self.values.len() - 1]
    }

    /// `V · diag(f(λ)) · V*`
    pub fn apply(&self, f: impl Fn(T) -> T) -> Matrix<T> {
        let v = &self.vectors;
        let n = v.rows();
        let fl: Vec<T> = self.values.iter().map(|&l| f(l)).collect();
        Matrix::from_fn(n, n, |i, j| (0..n).fold(Complex::zero(), |acc, k| acc + v[(i, k)] * v[(j, k)].conj() * fl[k]))
    }

    pub fn vector(&self, k: usize) -> Vec<Complex<T>> {
        self.vectors.column(k)
    }
}

/// Eigendecomposition of the Hermitian part of `h`.
///
/// Sweeps visit pairs `(p, q)`, `p < q`, in row order, so results are
/// reproducible bit for bit. Each rotation factors the 2×2 block as
/// `diag(e^{iφ}, 1) · S · diag(e^{-iφ}, 1)` with `S` real symmetric and
/// applies the real Jacobi rotation of `S`.
pub fn eigh<T: Real>(h: &Matrix<T>) -> Result<HermitianEigen<T>> {
    if !h.is_square() {
        return Err(Error::Shape(format!("eigh of {}x{} matrix", h.rows(), h.cols())));
    }
    let n = h.rows();
    if let Some((row, col)) = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .find(|&(i, j)| !h[(i, j)].re.is_finite() || !h[(i, j)].im.is_finite())
    {
        return Err(Error::NonFinite { row, col });
    }
    let mut a = h.hermitian_part();
    let mut v = Matrix::identity(n);
    let scale = a.max_abs().max(T::min_positive_value());
    let threshold = T::epsilon() * T::epsilon() * scale * scale;

    let mut converged = n == 1;
    for _ in 0..MAX_SWEEPS {
        let off: T =
            (0..n).flat_map(|p| (p + 1..n).map(move |q| (p, q))).fold(T::zero(), |s, (p, q)| s + a[(p, q)].norm_sqr());
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).expect("finite eigenvalues"));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

fn rotate<T: Real>(a: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize) {
    let n = a.rows();
    let apq = a[(p, q)];
    let r = apq.norm();
    if r <= T::min_positive_value() {
        return;
    }
    let phase = apq / r;
    let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
    let theta = (aqq - app) / (r + r);
    let t = {
        let t = T::one() / (theta.abs() + (theta * theta + T::one()).sqrt());
        if theta < T::zero() {
            -t
        } else {
            t
        }
    };
    let cos = T::one() / (t * t + T::one()).sqrt();
    let sin = t * cos;
    // unitary block U = [[e^{iφ}c, e^{iφ}s], [-s, c]]
    let u_pp = phase * cos;
    let u_pq = phase * sin;
    let u_qp = cr(-sin);
    let u_qq = cr(cos);

    for k in 0..n {
        let (x, y) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = x * u_pp + y * u_qp;
        a[(k, q)] = x * u_pq + y * u_qq;
    }
    for k in 0..n {
        let (x, y) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = u_pp.conj() * x + u_qp.conj() * y;
        a[(q, k)] = u_pq.conj() * x + u_qq.conj() * y;
    }
    a[(p, q)] = Complex::zero();
    a[(q, p)] = Complex::zero();
    a[(p, p)] = cr(a[(p, p)].re);
    a[(q, q)] = cr(a[(q, q)].re);
    for k in 0..n {
        let (x, y) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = x * u_pp + y * u_qp;
        v[(k, q)] = x * u_pq + y * u_qq;
    }
}

fn require_hermitian<T: Real>(h: &Matrix<T>, tol: Tolerance<T>) -> Result<()> {
    if !h.is_square() {
        return Err(Error::Shape(format!("{}x{} is not square", h.rows(), h.cols())));
    }
    let deviation = h.hermitian_deviation();
    if !tol.accepts(deviation) {
        return Err(Error::NotHermitian { deviation: deviation.as_f64() });
    }
    Ok(())
}

/// Unique PSD square root; eigenvalues in `[-eps, 0)` are clamped to zero.
pub fn psd_sqrt<T: Real>(h: &Matrix<T>, tol: Tolerance<T>) -> Result<Matrix<T>> {
    require_hermitian(h, tol)?;
    let eig = eigh(h)?;
    if eig.min() < -tol.eps {
        return Err(Error::NotPsd { eigenvalue: eig.min().as_f64() });
    }
    Ok(eig.apply(|l| l.max(T::zero()).sqrt()))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue<T: Real>(h: &Matrix<T>, tol: Tolerance<T>) -> Result<T> {
    require_hermitian(h, tol)?;
    Ok(eigh(h)?.min())
}

/// Positive semidefinite within `eps`, judged by the minimum eigenvalue.
pub fn check_psd<T: Real>(h: &Matrix<T>, tol: Tolerance<T>) -> Result<()> {
    let min = min_eigenvalue(h, tol)?;
    if min < -tol.eps {
        return Err(Error::NotPsd { eigenvalue: min.as_f64() });
    }
    Ok(())
}

/// `0 ≤ m ≤ I` within `eps`.
pub fn validate_effect<T: Real>(m: &Matrix<T>, tol: Tolerance<T>) -> Result<(), EffectViolation> {
    if !m.is_square() {
        return Err(EffectViolation::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let deviation = m.hermitian_deviation();
    if !tol.accepts(deviation) {
        return Err(EffectViolation::NotHermitian { deviation: deviation.as_f64() });
    }
    let eig = eigh(m).map_err(|_| EffectViolation::NotHermitian { deviation: f64::NAN })?;
    if eig.max() > T::one() + tol.eps {
        return Err(EffectViolation::EigenvalueAboveOne { eigenvalue: eig.max().as_f64() });
    }
    if eig.min() < -tol.eps {
        return Err(EffectViolation::EigenvalueBelowZero { eigenvalue: eig.min().as_f64() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type M = Matrix<f64>;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> M {
        M::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn tol() -> Tolerance<f64> {
        Tolerance::default()
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=6 {
            let b = random_matrix(&mut rng, n);
            let h = b.hermitian_part();
            let eig = eigh(&h).unwrap();
            let rebuilt = eig.apply(|l| l);
            assert!(rebuilt.deviation(&h) < 1e-12, "n={n}");
            let vv = &eig.vectors.adjoint() * &eig.vectors;
            assert!(vv.deviation(&M::identity(n)) < 1e-12);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eigh_trace_and_determinant_2x2() {
        // eigenvalues of [[a, b], [b*, d]] are (a+d)/2 ± sqrt(((a-d)/2)^2 + |b|^2)
        let h = M::from_rows(vec![vec![c(1.0, 0.0), c(0.5, 0.5)], vec![c(0.5, -0.5), c(-2.0, 0.0)]]).unwrap();
        let eig = eigh(&h).unwrap();
        let mid = -0.5;
        let rad = (1.5f64 * 1.5 + 0.5).sqrt();
        assert!((eig.values[0] - (mid - rad)).abs() < 1e-14);
        assert!((eig.values[1] - (mid + rad)).abs() < 1e-14);
    }

    #[test]
    fn eigh_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_matrix(&mut rng, 5).hermitian_part();
        let a = eigh(&h).unwrap();
        let b = eigh(&h).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn eigh_degenerate_spectrum() {
        let eig = eigh(&M::identity(4).scale_real(0.3)).unwrap();
        assert!(eig.values.iter().all(|&l| (l - 0.3).abs() < 1e-15));
    }

    #[test]
    fn psd_sqrt_examples() {
        assert!(psd_sqrt(&M::identity(3), tol()).unwrap().deviation(&M::identity(3)) < 1e-15);
        let r = psd_sqrt(&M::diag(&[4.0, 9.0]), tol()).unwrap();
        assert!(r.deviation(&M::diag(&[2.0, 3.0])) < 1e-14);
        let s = 0.5f64.sqrt();
        let plus = M::projector(&[c(s, 0.0), c(s, 0.0)]);
        assert!(psd_sqrt(&plus, tol()).unwrap().deviation(&plus) < 1e-14);
    }

    #[test]
    fn psd_sqrt_squares_back_on_random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=4 {
            for _ in 0..20 {
                let b = random_matrix(&mut rng, n);
                let h = &b * &b.adjoint();
                let r = psd_sqrt(&h, tol()).unwrap();
                assert!((&r * &r).deviation(&h) <= 10.0 * tol().eps);
                assert!(r.hermitian_deviation() < 1e-12);
            }
        }
    }

    #[test]
    fn psd_sqrt_errors() {
        let nonherm = M::real(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(psd_sqrt(&nonherm, tol()), Err(Error::NotHermitian { .. })));
        let neg = M::diag(&[1.0, -0.5]);
        assert_eq!(psd_sqrt(&neg, tol()), Err(Error::NotPsd { eigenvalue: -0.5 }));
        // within eps: clamped
        assert!(psd_sqrt(&M::diag(&[1.0, -1e-12]), tol()).is_ok());
    }

    #[test]
    fn eigh_rejects_non_finite_entries() {
        let mut m = M::identity(2);
        m[(1, 0)] = c(f64::NAN, 0.0);
        assert!(matches!(eigh(&m), Err(Error::NonFinite { row: 1, col: 0 })));
    }

    #[test]
    fn validate_effect_examples() {
        assert!(validate_effect(&M::zeros(2, 2), tol()).is_ok());
        assert!(validate_effect(&M::identity(2), tol()).is_ok());
        assert!(validate_effect(&M::diag(&[0.3, 0.7]), tol()).is_ok());
        let err = validate_effect(&M::diag(&[1.5, 0.0]), tol()).unwrap_err();
        assert_eq!(err, EffectViolation::EigenvalueAboveOne { eigenvalue: 1.5 });
        assert_eq!(err.to_string(), "eigenvalue 1.5 > 1");
        assert!(matches!(
            validate_effect(&M::diag(&[0.5, -0.1]), tol()),
            Err(EffectViolation::EigenvalueBelowZero { .. })
        ));
        assert!(matches!(validate_effect(&M::zeros(2, 3), tol()), Err(EffectViolation::NotSquare { .. })));
    }

    #[test]
    fn single_precision_sqrt() {
        let t = Tolerance::<f32>::default();
        let r = psd_sqrt(&Matrix::<f32>::diag(&[4.0, 0.25]), t).unwrap();
        assert!(r.deviation(&Matrix::diag(&[2.0, 0.5])) < 1e-5);
    }
}
