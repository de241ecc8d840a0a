//! Observables (POVMs) and multi-observables.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{mismatch, Error, Result};
use crate::factors::{reduce_to, FactorDims};
use crate::linalg::{psd_sqrt, validate_effect};
use crate::matrix::{kron_all, sum_all, Matrix};
use crate::outcome::{product_structure, OutcomeMap, OutcomeSpace, ProductCheck};
use crate::scalar::Real;
use crate::state::State;
use crate::tolerance::Tolerance;

/// Family of effects `{A_x : x ∈ Ω}` with `Σ_x A_x = I`.
///
/// Effects are stored in the flat outcome order of `space`. Every
/// constructor re-validates, so a value of this type always satisfies the
/// effect and completeness conditions within its tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable<T> {
    space: OutcomeSpace,
    dim: usize,
    effects: Vec<Matrix<T>>,
    tol: Tolerance<T>,
}

/// `Φ_ρ(x)` in the flat order of `space`.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<T> {
    pub space: OutcomeSpace,
    pub probs: Vec<T>,
}

impl<T: Real> Distribution<T> {
    pub fn get(&self, key: &str) -> Result<T> {
        Ok(self.probs[self.space.index_of_key(key)?])
    }

    pub fn total(&self) -> T {
        self.probs.iter().fold(T::zero(), |s, &p| s + p)
    }

    pub fn iter(&self) -> impl Iterator<Item = (String, T)> + '_ {
        self.probs.iter().enumerate().map(|(k, &p)| (self.space.key(k), p))
    }

    /// Largest `|p_x − q_x|`; infinite when the spaces differ.
    pub fn deviation(&self, other: &Self) -> T {
        if self.space != other.space {
            return T::infinity();
        }
        self.probs.iter().zip(&other.probs).fold(T::zero(), |m, (a, b)| m.worst((*a - *b).abs()))
    }
}

/// Per-axis deviations between the marginals of a candidate joint observable and targets.
#[derive(Clone, Debug, PartialEq)]
pub struct JointReport<T> {
    pub deviations: Vec<T>,
    pub pass: bool,
}

impl<T: Real> JointReport<T> {
    pub fn max_deviation(&self) -> T {
        self.deviations.iter().fold(T::zero(), |m, &d| m.worst(d))
    }
}

/// Result of checking that outcome maps give an observable (or instrument) a product structure.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductStructureReport<T> {
    pub check: ProductCheck,
    /// Deviation of `part(a, f_i)` from the `i`-marginal of `a` re-indexed by `h`;
    /// empty when no bijection exists.
    pub part_deviations: Vec<T>,
    pub pass: bool,
}

impl<T: Real> Observable<T> {
    pub fn new(space: OutcomeSpace, effects: Vec<Matrix<T>>, tol: Tolerance<T>) -> Result<Self> {
        if effects.len() != space.len() {
            return Err(Error::Structure(format!("{} effects for {} outcomes", effects.len(), space.len())));
        }
        let dim = effects[0].rows();
        let mut problems = Vec::new();
        for (k, e) in effects.iter().enumerate() {
            if e.shape() != (dim, dim) {
                return Err(mismatch(
                    format!("{dim}x{dim} effect"),
                    format!("{}x{} at {:?}", e.rows(), e.cols(), space.key(k)),
                ));
            }
            if let Err(v) = validate_effect(e, tol) {
                problems.push(format!("effect {:?}: {v}", space.key(k)));
            }
        }
        let residual = &sum_all(&effects).expect("nonempty") - &Matrix::identity(dim);
        let residual_norm = residual.max_abs();
        let residual = if tol.accepts(residual_norm) {
            None
        } else {
            problems.push(format!("completeness residual {:e}", residual_norm.as_f64()));
            Some(residual.entries().iter().map(|z| (z.re.as_f64(), z.im.as_f64())).collect())
        };
        if !problems.is_empty() {
            return Err(Error::InvalidObservable { problems, residual });
        }
        Ok(Self { space, dim, effects, tol })
    }

    /// Single-axis observable from `(label, effect)` pairs.
    pub fn from_labelled<S: Into<String>>(
        pairs: impl IntoIterator<Item = (S, Matrix<T>)>,
        tol: Tolerance<T>,
    ) -> Result<Self> {
        let (labels, effects): (Vec<String>, Vec<Matrix<T>>) = pairs.into_iter().map(|(l, m)| (l.into(), m)).unzip();
        if effects.is_empty() {
            return Err(Error::Empty("effects"));
        }
        Self::new(OutcomeSpace::flat(labels)?, effects, tol)
    }

    /// `{I}` on a single outcome.
    pub fn trivial(dim: usize, label: &str, tol: Tolerance<T>) -> Result<Self> {
        Self::new(OutcomeSpace::flat([label])?, vec![Matrix::identity(dim)], tol)
    }

    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn effects(&self) -> &[Matrix<T>] {
        &self.effects
    }

    pub fn tolerance(&self) -> Tolerance<T> {
        self.tol
    }

    pub fn effect(&self, key: &str) -> Result<&Matrix<T>> {
        Ok(&self.effects[self.space.index_of_key(key)?])
    }

    /// Single outcome, effect `I`.
    pub fn is_trivial(&self) -> bool {
        self.effects.len() == 1
    }

    /// `A(Δ) = Σ_{x∈Δ} A_x`; the empty set gives `0`.
    pub fn effect_of(&self, delta: &[usize]) -> Matrix<T> {
        sum_all(delta.iter().map(|&x| &self.effects[x])).unwrap_or_else(|| Matrix::zeros(self.dim, self.dim))
    }

    /// `Φ_ρ(x) = tr(ρ A_x)` for every outcome.
    pub fn distribution(&self, rho: &State<T>) -> Result<Distribution<T>> {
        if rho.dim() != self.dim {
            return Err(mismatch(format!("state of dimension {}", self.dim), rho.dim()));
        }
        let probs = self.effects.iter().map(|e| trace_product(rho.matrix(), e)).collect();
        Ok(Distribution { space: self.space.clone(), probs })
    }

    /// `P_ρ(Δ) = tr[ρ A(Δ)]` for outcome keys `delta`.
    pub fn probability(&self, rho: &State<T>, delta: &[&str]) -> Result<T> {
        if rho.dim() != self.dim {
            return Err(mismatch(format!("state of dimension {}", self.dim), rho.dim()));
        }
        let idx = delta.iter().map(|k| self.space.index_of_key(k)).collect::<Result<Vec<_>>>()?;
        Ok(trace_product(rho.matrix(), &self.effect_of(&idx)))
    }

    /// `B_y = A[f^{-1}(y)]`; a single-outcome image is the trivial part `{I}`.
    pub fn part(&self, f: &OutcomeMap) -> Result<Self> {
        if *f.source() != self.space {
            return Err(Error::Structure("outcome map source differs from observable space".into()));
        }
        let effects = (0..f.target().len()).map(|y| self.effect_of(&f.fiber(y))).collect();
        Self::new(f.target().clone(), effects, self.tol)
    }

    /// `A^i_y = A[Ω^{(x_i = y)}]`, summed slice by slice in ascending flat order.
    pub fn marginal(&self, axis: usize) -> Result<Self> {
        let target = self.space.axis_space(axis)?;
        let mut effects = vec![Matrix::zeros(self.dim, self.dim); target.len()];
        for (x, e) in self.effects.iter().enumerate() {
            effects[self.space.component(x, axis)] += e;
        }
        Self::new(target, effects, self.tol)
    }

    /// Reduced observable on factor `factor`: normalized partial trace of
    /// every effect over all other factors. Outcome space is unchanged.
    pub fn reduced(&self, factor: usize, dims: &FactorDims) -> Result<Self> {
        dims.check(self.dim)?;
        let norm = T::one() / T::lit(dims.others(factor) as f64);
        let effects = self
            .effects
            .iter()
            .map(|e| Ok(reduce_to(e, dims, factor)?.scale_real(norm)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.space.clone(), effects, self.tol)
    }

    /// Weights `λ_x` when every effect is within `eps` of `λ_x I`.
    pub fn identity_weights(&self, tol: Tolerance<T>) -> Option<Vec<T>> {
        let mut weights = Vec::with_capacity(self.effects.len());
        for e in &self.effects {
            let (lambda, dev) = e.scalar_part();
            if !tol.accepts(dev) || lambda.re < -tol.eps || lambda.re > T::one() + tol.eps {
                return None;
            }
            weights.push(lambda.re);
        }
        Some(weights)
    }

    /// Copy re-indexed by a bijection `h` onto `product`.
    pub fn reindexed(&self, product: &OutcomeSpace, h: &[usize]) -> Result<Self> {
        if product.len() != self.space.len() || h.len() != self.effects.len() {
            return Err(Error::Structure("re-indexing map is not a bijection".into()));
        }
        let mut effects = vec![None; product.len()];
        for (x, &t) in h.iter().enumerate() {
            if effects[t].replace(self.effects[x].clone()).is_some() {
                return Err(Error::Structure("re-indexing map is not injective".into()));
            }
        }
        Self::new(product.clone(), effects.into_iter().map(Option::unwrap).collect(), self.tol)
    }

    /// Largest effect deviation; infinite when the outcome spaces differ.
    pub fn deviation(&self, other: &Self) -> T {
        if self.space != other.space || self.dim != other.dim {
            return T::infinity();
        }
        self.effects.iter().zip(&other.effects).fold(T::zero(), |m, (a, b)| m.worst(a.deviation(b)))
    }
}

/// `tr(a b)`, real part; `a`, `b` Hermitian.
pub(crate) fn trace_product<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> T {
    let n = a.rows();
    let mut s = Complex::zero();
    for i in 0..n {
        for k in 0..n {
            s = s + a[(i, k)] * b[(k, i)];
        }
    }
    s.re
}

fn common_tolerance<T: Real>(parts: &[Observable<T>]) -> Tolerance<T> {
    parts.iter().map(|p| p.tol).reduce(Tolerance::max).expect("nonempty")
}

/// `A_{x_1⋯x_n} = A_{1x_1} ⊗ ⋯ ⊗ A_{nx_n}` on `H_1 ⊗ ⋯ ⊗ H_n`.
pub fn tensor_observables<T: Real>(parts: &[Observable<T>]) -> Result<Observable<T>> {
    if parts.len() < 2 {
        return Err(Error::Empty("tensor product needs at least two observables"));
    }
    let space = OutcomeSpace::product(parts.iter().map(|p| &p.space))?;
    let sub_spaces: Vec<OutcomeSpace> = parts.iter().map(|p| OutcomeSpace::numbered(p.space.len())).collect();
    let index = OutcomeSpace::product(&sub_spaces)?;
    let effects = (0..space.len())
        .map(|x| {
            let digits = index.digits(x);
            kron_all(parts.iter().zip(&digits).map(|(p, &d)| &p.effects[d])).expect("nonempty")
        })
        .collect();
    Observable::new(space, effects, common_tolerance(parts))
}

/// Lüders sequential product
/// `A_{x_1⋯x_n} = A_{1x_1}^{1/2} ⋯ A_{(n-1)x_{n-1}}^{1/2} A_{nx_n} A_{(n-1)x_{n-1}}^{1/2} ⋯ A_{1x_1}^{1/2}`.
pub fn luders_sequential<T: Real>(parts: &[Observable<T>]) -> Result<Observable<T>> {
    let last = parts.last().ok_or(Error::Empty("observables"))?;
    let dim = last.dim;
    if let Some(p) = parts.iter().find(|p| p.dim != dim) {
        return Err(mismatch(format!("dimension {dim}"), p.dim));
    }
    let tol = common_tolerance(parts);
    let roots = parts[..parts.len() - 1]
        .iter()
        .map(|p| p.effects.iter().map(|e| psd_sqrt(e, tol)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let space = OutcomeSpace::product(parts.iter().map(|p| &p.space))?;
    let index =
        OutcomeSpace::product(&parts.iter().map(|p| OutcomeSpace::numbered(p.space.len())).collect::<Vec<_>>())?;
    let effects = (0..space.len())
        .map(|x| {
            let digits = index.digits(x);
            let mut inner = last.effects[digits[parts.len() - 1]].clone();
            for (k, root_family) in roots.iter().enumerate().rev() {
                let r = &root_family[digits[k]];
                inner = &(r * &inner) * r;
            }
            inner
        })
        .collect();
    Observable::new(space, effects, tol)
}

/// Joint observable `C_{x_1⋯x_n} = B_{1x_1} ⋯ B_{nx_n}` for mutually commuting parts,
/// symmetrized as `(P + P*)/2`.
pub fn commuting_joint<T: Real>(parts: &[Observable<T>]) -> Result<Observable<T>> {
    let first = parts.first().ok_or(Error::Empty("observables"))?;
    let dim = first.dim;
    if let Some(p) = parts.iter().find(|p| p.dim != dim) {
        return Err(mismatch(format!("dimension {dim}"), p.dim));
    }
    let tol = common_tolerance(parts);
    let mut worst = T::zero();
    for (i, p) in parts.iter().enumerate() {
        for q in &parts[i + 1..] {
            for a in &p.effects {
                for b in &q.effects {
                    worst = worst.max(a.commutator(b).max_abs());
                }
            }
        }
    }
    if !tol.accepts(worst) {
        return Err(Error::NotCommuting { norm: worst.as_f64() });
    }
    let space = OutcomeSpace::product(parts.iter().map(|p| &p.space))?;
    let index =
        OutcomeSpace::product(&parts.iter().map(|p| OutcomeSpace::numbered(p.space.len())).collect::<Vec<_>>())?;
    let effects = (0..space.len())
        .map(|x| {
            let digits = index.digits(x);
            let prod =
                parts.iter().zip(&digits).map(|(p, &d)| &p.effects[d]).fold(Matrix::identity(dim), |acc, e| &acc * e);
            prod.hermitian_part()
        })
        .collect();
    Observable::new(space, effects, tol)
}

/// Compares each marginal `c^i` with `targets[i]`.
pub fn verify_joint<T: Real>(
    c: &Observable<T>,
    targets: &[Observable<T>],
    tol: Tolerance<T>,
) -> Result<JointReport<T>> {
    if c.space.num_axes() != targets.len() {
        return Err(Error::Structure(format!(
            "joint has {} axes but {} targets given",
            c.space.num_axes(),
            targets.len()
        )));
    }
    let mut deviations = Vec::with_capacity(targets.len());
    for (i, t) in targets.iter().enumerate() {
        let m = c.marginal(i)?;
        if t.space != m.space {
            return Err(Error::Structure(format!(
                "target {i} outcomes {} differ from joint axis {}",
                t.space, m.space
            )));
        }
        if t.dim != c.dim {
            return Err(mismatch(format!("target {i} of dimension {}", c.dim), t.dim));
        }
        deviations.push(m.deviation(t));
    }
    let pass = deviations.iter().all(|&d| tol.accepts(d));
    Ok(JointReport { deviations, pass })
}

/// Checks that the maps `fs` give `a` a nontrivial product structure and that each
/// part `f_i(a)` is the `i`-marginal of `a` re-indexed by `h = (f_1, …, f_n)`.
pub fn verify_product_structure<T: Real>(
    a: &Observable<T>,
    fs: &[OutcomeMap],
    tol: Tolerance<T>,
) -> Result<ProductStructureReport<T>> {
    let check = product_structure(&a.space, fs)?;
    let part_deviations = match &check {
        ProductCheck::Bijection { product, h } => {
            let grid = a.reindexed(product, h)?;
            fs.iter()
                .enumerate()
                .map(|(i, f)| Ok(a.part(f)?.deviation(&grid.marginal(i)?)))
                .collect::<Result<Vec<_>>>()?
        }
        ProductCheck::BadIntersection { .. } => Vec::new(),
    };
    let pass = matches!(check, ProductCheck::Bijection { .. }) && part_deviations.iter().all(|&d| tol.accepts(d));
    Ok(ProductStructureReport { check, part_deviations, pass })
}
