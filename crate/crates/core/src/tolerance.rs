use crate::scalar::Real;

/// Absolute slack used by every approximate predicate (Hermiticity, positivity,
/// completeness, equality of operators).
///
/// Comparisons are made against the largest absolute entry of a difference or
/// against extreme eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance<T> {
    pub eps: T,
}

impl<T: Real> Tolerance<T> {
    pub fn new(eps: T) -> Self {
        assert!(eps >= T::zero(), "tolerance must be nonnegative");
        Self { eps }
    }

    /// Scaled copy, e.g. `tol.times(10)` for products of approximate quantities.
    pub fn times(self, factor: usize) -> Self {
        Self { eps: self.eps * T::lit(factor as f64) }
    }

    pub fn max(self, other: Self) -> Self {
        Self { eps: self.eps.max(other.eps) }
    }

    pub fn accepts(self, deviation: T) -> bool {
        deviation <= self.eps
    }
}

impl<T: Real> Default for Tolerance<T> {
    /// `1e-9`, widened for low-precision scalars so that rounding alone never trips it.
    fn default() -> Self {
        let floor = T::epsilon() * T::lit(1e3);
        Self { eps: T::lit(1e-9).max(floor) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_1e_minus_9_for_f64() {
        assert_eq!(Tolerance::<f64>::default().eps, 1e-9);
    }

    #[test]
    fn default_widens_for_f32() {
        let eps = Tolerance::<f32>::default().eps;
        assert!(eps > 1e-5 && eps < 1e-3);
    }
}
