//! Seeded random constructions for property suites.
//!
//! Everything is sampled in `f64` and cast, so the same seed yields the same
//! objects across scalar types up to rounding.

use rand::Rng;

use crate::error::Result;
use crate::instrument::{construct_kraus, Instrument};
use crate::linalg::eigh;
use crate::matrix::Matrix;
use crate::observable::Observable;
use crate::operation::Operation;
use crate::outcome::{OutcomeMap, OutcomeSpace};
use crate::scalar::{c, Real};
use crate::state::State;
use crate::tolerance::Tolerance;

/// Entries with real and imaginary parts uniform in `[-1, 1)`.
pub fn matrix<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |_, _| c(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0))))
}

pub fn hermitian<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matrix<T> {
    matrix(rng, n, n).hermitian_part()
}

/// `B B*` for random `B`.
pub fn psd<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matrix<T> {
    let b: Matrix<T> = matrix(rng, n, n);
    &b * &b.adjoint()
}

pub fn state<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> State<T> {
    let p: Matrix<T> = psd(rng, n);
    let t = p.trace().re;
    State::new(p.scale_real(T::one() / t), Tolerance::default()).expect("normalized PSD")
}

fn inverse_sqrt<T: Real>(s: &Matrix<T>) -> Matrix<T> {
    eigh(s).expect("Hermitian").apply(|l| T::one() / l.sqrt())
}

/// Observable on `space` with effects `S^{-1/2} G_x S^{-1/2}`, `G_x` random PSD and
/// `S = Σ_x G_x`.
pub fn observable<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    space: &OutcomeSpace,
    dim: usize,
    tol: Tolerance<T>,
) -> Result<Observable<T>> {
    let raw: Vec<Matrix<T>> = (0..space.len()).map(|_| psd(rng, dim)).collect();
    let mut s = Matrix::zeros(dim, dim);
    for g in &raw {
        s += g;
    }
    let w = inverse_sqrt(&s);
    let effects = raw.iter().map(|g| (&(&w * g) * &w).hermitian_part()).collect();
    Observable::new(space.clone(), effects, tol)
}

/// Operation with `kraus_count` random Kraus operators, scaled so that
/// `Σ K* K ≤ I` strictly.
pub fn operation<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    in_dim: usize,
    out_dim: usize,
    kraus_count: usize,
) -> Operation<T> {
    let kraus: Vec<Matrix<T>> = (0..kraus_count).map(|_| matrix(rng, out_dim, in_dim)).collect();
    let mut gram = Matrix::zeros(in_dim, in_dim);
    for k in &kraus {
        gram += &(&k.adjoint() * k);
    }
    let top = eigh(&gram).expect("Hermitian").max();
    let shrink = T::lit(rng.gen_range(0.3..1.0)) / top.sqrt();
    Operation::new(kraus.iter().map(|k| k.scale_real(shrink)).collect(), Tolerance::default())
        .expect("trace non-increasing by scaling")
}

/// Kraus instrument with at least `kraus_per_outcome` operators per outcome,
/// normalized as `K S^{-1/2}` with `S = Σ K* K`. The count is raised when needed so
/// that `S` has full rank (total Kraus count × `out_dim` ≥ `in_dim`).
pub fn instrument<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    space: &OutcomeSpace,
    in_dim: usize,
    out_dim: usize,
    kraus_per_outcome: usize,
    tol: Tolerance<T>,
) -> Result<Instrument<T>> {
    let per = kraus_per_outcome.max(in_dim.div_ceil(space.len() * out_dim));
    let raw: Vec<Vec<Matrix<T>>> =
        (0..space.len()).map(|_| (0..per).map(|_| matrix(rng, out_dim, in_dim)).collect()).collect();
    let mut s = Matrix::zeros(in_dim, in_dim);
    for k in raw.iter().flatten() {
        s += &(&k.adjoint() * k);
    }
    let w = inverse_sqrt(&s);
    let kraus = raw.iter().map(|ks| ks.iter().map(|k| k * &w).collect()).collect();
    construct_kraus(space.clone(), kraus, tol)
}

/// Random surjection from `space` onto `target_size` numbered labels
/// (`target_size ≤ |space|`).
pub fn surjection<R: Rng + ?Sized>(rng: &mut R, space: &OutcomeSpace, target_size: usize) -> OutcomeMap {
    assert!((1..=space.len()).contains(&target_size), "target larger than source");
    let n = space.len();
    // first `target_size` slots of a random permutation get distinct images
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut mapping = vec![0; n];
    for (pos, &x) in order.iter().enumerate() {
        mapping[x] = if pos < target_size { pos } else { rng.gen_range(0..target_size) };
    }
    OutcomeMap::new(space.clone(), OutcomeSpace::numbered(target_size), mapping).expect("surjective by construction")
}
