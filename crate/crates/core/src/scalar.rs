use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FromPrimitive};

/// Real scalar type backing every complex matrix: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal into this scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `max` for deviations: NaN counts as infinitely bad instead of being skipped.
    fn worst(self, x: Self) -> Self {
        if self.is_nan() || x.is_nan() {
            Self::infinity()
        } else {
            self.max(x)
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

pub(crate) fn cr<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}
