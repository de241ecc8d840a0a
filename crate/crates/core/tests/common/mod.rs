#![allow(dead_code)]

use qmulti_core::{Complex, ComplexMatrix, ObservableF64, OutcomeSpace, Tolerance, ToleranceF64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type M = ComplexMatrix;

pub fn tol() -> ToleranceF64 {
    Tolerance::default()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

pub fn space(shape: &[usize]) -> OutcomeSpace {
    OutcomeSpace::new(
        shape
            .iter()
            .enumerate()
            .map(|(a, &n)| (0..n).map(|k| format!("{}{k}", (b'a' + a as u8) as char)).collect())
            .collect(),
    )
    .unwrap()
}

pub fn plus_minus() -> ObservableF64 {
    let h = 0.5;
    ObservableF64::from_labelled(
        [("+", M::real(&[&[h, h], &[h, h]]).unwrap()), ("-", M::real(&[&[h, -h], &[-h, h]]).unwrap())],
        tol(),
    )
    .unwrap()
}

pub fn zero_one() -> ObservableF64 {
    ObservableF64::from_labelled([("0", M::diag(&[1.0, 0.0])), ("1", M::diag(&[0.0, 1.0]))], tol()).unwrap()
}

/// `tr(a b)`
pub fn tr_prod(a: &M, b: &M) -> Complex<f64> {
    (a * b).trace()
}
