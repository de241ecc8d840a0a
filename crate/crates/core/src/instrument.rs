//! Instruments and multi-instruments: finite families of operations summing to a channel.

use crate::error::{mismatch, Error, Result};
use crate::factors::{reduction_kraus, FactorDims};
use crate::linalg::{eigh, psd_sqrt};
use crate::matrix::Matrix;
use crate::observable::{Distribution, Observable, ProductStructureReport};
use crate::operation::Operation;
use crate::outcome::{product_structure, OutcomeMap, OutcomeSpace, ProductCheck};
use crate::scalar::Real;
use crate::state::State;
use crate::tolerance::Tolerance;

/// `{I_x : x ∈ Ω}` from `H_in` to `H_out` with `Σ_x I_x` a channel.
///
/// `out_factors`, when present, splits `H_out = H_1 ⊗ ⋯ ⊗ H_n`; reductions and
/// joint-instrument checks rely on it.
#[derive(Clone, Debug, PartialEq)]
pub struct Instrument<T> {
    space: OutcomeSpace,
    in_dim: usize,
    out_dim: usize,
    out_factors: Option<FactorDims>,
    operations: Vec<Operation<T>>,
    tol: Tolerance<T>,
}

/// Deviations found while checking a candidate joint instrument.
#[derive(Clone, Debug, PartialEq)]
pub struct JointInstrumentReport<T> {
    /// `max |ⁱJⁱ_x(E_kl) − I_i,x(E_kl)|` per target.
    pub instrument_deviations: Vec<T>,
    /// Deviation of the `i`-marginal of the measured observable of `J` from
    /// the observable measured by target `i`.
    pub observable_deviations: Vec<T>,
    pub pass: bool,
    /// Whether the measured observables are confirmed to coexist (their
    /// deviations pass even if the instrument ones do not).
    pub observables_pass: bool,
}

impl<T: Real> Instrument<T> {
    pub fn new(space: OutcomeSpace, operations: Vec<Operation<T>>, tol: Tolerance<T>) -> Result<Self> {
        if operations.len() != space.len() {
            return Err(Error::Structure(format!("{} operations for {} outcomes", operations.len(), space.len())));
        }
        let (in_dim, out_dim) = (operations[0].in_dim(), operations[0].out_dim());
        if let Some(op) = operations.iter().find(|o| (o.in_dim(), o.out_dim()) != (in_dim, out_dim)) {
            return Err(mismatch(
                format!("operations {in_dim}->{out_dim}"),
                format!("{}->{}", op.in_dim(), op.out_dim()),
            ));
        }
        let total = Operation::sum(&operations)?;
        let residual = total.kraus_gram().deviation(&Matrix::identity(in_dim));
        if !tol.accepts(residual) {
            return Err(Error::NotChannel { residual: residual.as_f64() });
        }
        Ok(Self { space, in_dim, out_dim, out_factors: None, operations, tol })
    }

    pub fn from_labelled<S: Into<String>>(
        pairs: impl IntoIterator<Item = (S, Operation<T>)>,
        tol: Tolerance<T>,
    ) -> Result<Self> {
        let (labels, ops): (Vec<String>, Vec<Operation<T>>) = pairs.into_iter().map(|(l, o)| (l.into(), o)).unzip();
        if ops.is_empty() {
            return Err(Error::Empty("operations"));
        }
        Self::new(OutcomeSpace::flat(labels)?, ops, tol)
    }

    /// Declares `H_out = H_1 ⊗ ⋯ ⊗ H_n`.
    pub fn with_out_factors(mut self, factors: FactorDims) -> Result<Self> {
        factors.check(self.out_dim)?;
        self.out_factors = Some(factors);
        Ok(self)
    }

    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn out_factors(&self) -> Option<&FactorDims> {
        self.out_factors.as_ref()
    }

    pub fn operations(&self) -> &[Operation<T>] {
        &self.operations
    }

    pub fn tolerance(&self) -> Tolerance<T> {
        self.tol
    }

    pub fn operation(&self, key: &str) -> Result<&Operation<T>> {
        Ok(&self.operations[self.space.index_of_key(key)?])
    }

    /// The channel `Ī = Σ_x I_x`.
    pub fn total(&self) -> Operation<T> {
        Operation::sum(&self.operations).expect("nonempty, shared shape")
    }

    /// `I(Δ)` for flat outcome indices; the empty set gives the zero operation.
    pub fn operation_of(&self, delta: &[usize]) -> Operation<T> {
        if delta.is_empty() {
            return Operation::zero(self.in_dim, self.out_dim);
        }
        Operation::sum(delta.iter().map(|&x| &self.operations[x])).expect("shared shape")
    }

    /// Observable with effects `I_x*(I)`.
    pub fn measured_observable(&self) -> Result<Observable<T>> {
        let effects = self.operations.iter().map(Operation::measured_effect).collect();
        Observable::new(self.space.clone(), effects, self.tol)
    }

    /// `Φ_ρ(x) = tr[I_x(ρ)]`
    pub fn distribution(&self, rho: &State<T>) -> Result<Distribution<T>> {
        let probs =
            self.operations.iter().map(|op| Ok(op.apply(rho.matrix())?.trace().re)).collect::<Result<Vec<_>>>()?;
        Ok(Distribution { space: self.space.clone(), probs })
    }

    pub fn probability(&self, rho: &State<T>, delta: &[&str]) -> Result<T> {
        let idx = delta.iter().map(|k| self.space.index_of_key(k)).collect::<Result<Vec<_>>>()?;
        Ok(self.operation_of(&idx).apply(rho.matrix())?.trace().re)
    }

    fn derived(&self, space: OutcomeSpace, operations: Vec<Operation<T>>) -> Result<Self> {
        let mut out = Self::new(space, operations, self.tol)?;
        out.out_factors = self.out_factors.clone();
        Ok(out)
    }

    /// `J_y = I[f^{-1}(y)]`
    pub fn part(&self, f: &OutcomeMap) -> Result<Self> {
        if *f.source() != self.space {
            return Err(Error::Structure("outcome map source differs from instrument space".into()));
        }
        let ops = (0..f.target().len()).map(|y| self.operation_of(&f.fiber(y))).collect();
        self.derived(f.target().clone(), ops)
    }

    /// `Iⁱ_y = I[Ω^{(x_i = y)}]`: Kraus families concatenated over each slice in flat order.
    pub fn marginal(&self, axis: usize) -> Result<Self> {
        let target = self.space.axis_space(axis)?;
        let mut slices: Vec<Vec<usize>> = vec![Vec::new(); target.len()];
        for x in 0..self.space.len() {
            slices[self.space.component(x, axis)].push(x);
        }
        let ops = slices.iter().map(|s| self.operation_of(s)).collect();
        self.derived(target, ops)
    }

    /// `ⁱI_x(ρ) = tr_{H_j, j≠i}[I_x(ρ)]`, realized by composing each operation with
    /// the partial-trace channel onto factor `factor` of `dims`.
    pub fn reduced(&self, factor: usize, dims: &FactorDims) -> Result<Self> {
        dims.check(self.out_dim)?;
        let tr = Operation::from_kraus(reduction_kraus(dims, factor)?)?;
        let ops = self.operations.iter().map(|op| op.then(&tr)).collect::<Result<Vec<_>>>()?;
        Self::new(self.space.clone(), ops, self.tol)
    }

    /// Reduction using the declared output factors.
    pub fn reduced_to(&self, factor: usize) -> Result<Self> {
        let dims = self
            .out_factors
            .clone()
            .ok_or_else(|| Error::Structure("instrument has no output factor annotation".into()))?;
        self.reduced(factor, &dims)
    }

    pub fn reindexed(&self, product: &OutcomeSpace, h: &[usize]) -> Result<Self> {
        if product.len() != self.space.len() || h.len() != self.operations.len() {
            return Err(Error::Structure("re-indexing map is not a bijection".into()));
        }
        let mut ops = vec![None; product.len()];
        for (x, &t) in h.iter().enumerate() {
            if ops[t].replace(self.operations[x].clone()).is_some() {
                return Err(Error::Structure("re-indexing map is not injective".into()));
            }
        }
        self.derived(product.clone(), ops.into_iter().map(Option::unwrap).collect())
    }

    /// Extensional deviation, outcome by outcome; infinite when outcome spaces differ.
    pub fn deviation(&self, other: &Self) -> T {
        if self.space != other.space {
            return T::infinity();
        }
        self.operations.iter().zip(&other.operations).fold(T::zero(), |m, (a, b)| m.worst(a.deviation(b)))
    }
}

/// Kraus instrument `K_x(B) = Σ_j K_{x,j} B K_{x,j}*`; one list per outcome.
pub fn construct_kraus<T: Real>(
    space: OutcomeSpace,
    kraus_by_outcome: Vec<Vec<Matrix<T>>>,
    tol: Tolerance<T>,
) -> Result<Instrument<T>> {
    let ops = kraus_by_outcome.into_iter().map(Operation::from_kraus).collect::<Result<Vec<_>>>()?;
    Instrument::new(space, ops, tol)
}

/// Lüders instrument `L_x(B) = A_x^{1/2} B A_x^{1/2}`.
pub fn construct_luders<T: Real>(a: &Observable<T>) -> Result<Instrument<T>> {
    let ops = a
        .effects()
        .iter()
        .map(|e| Operation::from_kraus(vec![psd_sqrt(e, a.tolerance())?]))
        .collect::<Result<Vec<_>>>()?;
    Instrument::new(a.space().clone(), ops, a.tolerance())
}

/// Holevo instrument `H_x(B) = tr(B A_x) α_x`.
///
/// Kraus operators are `√(b_k a_j) |v_k⟩⟨u_j|` over eigenpairs `(a_j, u_j)` of
/// `A_x` and `(b_k, v_k)` of `α_x`; eigenvalues at or below `eps` are dropped.
pub fn construct_holevo<T: Real>(a: &Observable<T>, alphas: &[State<T>]) -> Result<Instrument<T>> {
    if alphas.len() != a.effects().len() {
        return Err(Error::Structure(format!("{} states for {} outcomes", alphas.len(), a.effects().len())));
    }
    let out_dim = alphas[0].dim();
    if let Some(s) = alphas.iter().find(|s| s.dim() != out_dim) {
        return Err(mismatch(format!("states of dimension {out_dim}"), s.dim()));
    }
    let eps = a.tolerance().eps;
    let mut ops = Vec::with_capacity(alphas.len());
    for (effect, alpha) in a.effects().iter().zip(alphas) {
        let ea = eigh(effect)?;
        let eb = eigh(alpha.matrix())?;
        let mut kraus = Vec::new();
        for (j, &aj) in ea.values.iter().enumerate() {
            if aj <= eps {
                continue;
            }
            let u = ea.vector(j);
            for (k, &bk) in eb.values.iter().enumerate() {
                if bk <= eps {
                    continue;
                }
                kraus.push(Matrix::outer(&eb.vector(k), &u).scale_real((aj * bk).sqrt()));
            }
        }
        ops.push(if kraus.is_empty() { Operation::zero(a.dim(), out_dim) } else { Operation::from_kraus(kraus)? });
    }
    Instrument::new(a.space().clone(), ops, a.tolerance())
}

/// Tensor product `K_{x_1⋯x_n} = I_{1x_1} ⊗ ⋯ ⊗ I_{nx_n}` with Kraus operators
/// `K¹_{j_1} ⊗ ⋯ ⊗ Kⁿ_{j_n}`. Output factors are the parts' output dimensions.
pub fn tensor_instruments<T: Real>(parts: &[Instrument<T>]) -> Result<Instrument<T>> {
    if parts.len() < 2 {
        return Err(Error::Empty("tensor product needs at least two instruments"));
    }
    let space = OutcomeSpace::product(parts.iter().map(|p| &p.space))?;
    let index = numbered_product(parts.iter().map(|p| p.space.len()))?;
    let ops = (0..space.len())
        .map(|x| {
            let digits = index.digits(x);
            let mut it = parts.iter().zip(&digits).map(|(p, &d)| &p.operations[d]);
            let first = it.next().expect("nonempty").clone();
            it.fold(first, |acc, op| acc.tensor(op))
        })
        .collect();
    let tol = parts.iter().map(|p| p.tol).reduce(Tolerance::max).expect("nonempty");
    Instrument::new(space, ops, tol)?.with_out_factors(FactorDims::new(parts.iter().map(|p| p.out_dim).collect())?)
}

/// Sequential product `I_{x_1⋯x_n}(ρ) = I_{nx_n}(⋯ I_{1x_1}(ρ))`; Kraus operators
/// are the ordered products `Kⁿ ⋯ K¹`.
pub fn sequential_instruments<T: Real>(parts: &[Instrument<T>]) -> Result<Instrument<T>> {
    let last = parts.last().ok_or(Error::Empty("instruments"))?;
    for w in parts.windows(2) {
        if w[0].out_dim != w[1].in_dim {
            return Err(mismatch(format!("next input dimension {}", w[0].out_dim), w[1].in_dim));
        }
    }
    let space = OutcomeSpace::product(parts.iter().map(|p| &p.space))?;
    let index = numbered_product(parts.iter().map(|p| p.space.len()))?;
    let ops = (0..space.len())
        .map(|x| {
            let digits = index.digits(x);
            let mut it = parts.iter().zip(&digits).map(|(p, &d)| &p.operations[d]);
            let first = it.next().expect("nonempty").clone();
            it.try_fold(first, |acc, op| acc.then(op))
        })
        .collect::<Result<Vec<_>>>()?;
    let tol = parts.iter().map(|p| p.tol).reduce(Tolerance::max).expect("nonempty");
    let mut out = Instrument::new(space, ops, tol)?;
    out.out_factors = last.out_factors.clone();
    Ok(out)
}

fn numbered_product(sizes: impl Iterator<Item = usize>) -> Result<OutcomeSpace> {
    OutcomeSpace::product(&sizes.map(OutcomeSpace::numbered).collect::<Vec<_>>())
}

fn require_measures<T: Real>(i: &Instrument<T>, a: &Observable<T>, tol: Tolerance<T>) -> Result<()> {
    let deviation = i.measured_observable()?.deviation(a);
    if !tol.accepts(deviation) {
        return Err(Error::DoesNotMeasure { deviation: deviation.as_f64() });
    }
    Ok(())
}

/// `(A[I]B)_{xy} = I_x*(B_y)` for an instrument `I` measuring `A`.
pub fn seq_product_observables<T: Real>(
    a: &Observable<T>,
    i: &Instrument<T>,
    b: &Observable<T>,
    tol: Tolerance<T>,
) -> Result<Observable<T>> {
    require_measures(i, a, tol)?;
    if b.dim() != i.out_dim {
        return Err(mismatch(format!("second observable of dimension {}", i.out_dim), b.dim()));
    }
    let space = OutcomeSpace::product([a.space(), b.space()])?;
    let mut effects = Vec::with_capacity(space.len());
    for op in &i.operations {
        for e in b.effects() {
            effects.push(op.dual_apply(e)?);
        }
    }
    Observable::new(space, effects, a.tolerance().max(tol))
}

/// `(B|I|A)_y = Σ_x I_x*(B_y)`
pub fn conditioned_observable<T: Real>(
    b: &Observable<T>,
    i: &Instrument<T>,
    a: &Observable<T>,
    tol: Tolerance<T>,
) -> Result<Observable<T>> {
    require_measures(i, a, tol)?;
    if b.dim() != i.out_dim {
        return Err(mismatch(format!("observable of dimension {}", i.out_dim), b.dim()));
    }
    let total = i.total();
    let effects = b.effects().iter().map(|e| total.dual_apply(e)).collect::<Result<Vec<_>>>()?;
    Observable::new(b.space().clone(), effects, b.tolerance().max(tol))
}

/// Checks `ⁱJⁱ = I_i` for each target over the matrix-unit probe basis, and that the
/// marginals of `Ĵ` equal the measured observables `Î_i`.
pub fn verify_joint_instrument<T: Real>(
    j: &Instrument<T>,
    targets: &[Instrument<T>],
    tol: Tolerance<T>,
) -> Result<JointInstrumentReport<T>> {
    let factors = j
        .out_factors
        .as_ref()
        .ok_or_else(|| Error::Structure("joint instrument needs output factor annotation".into()))?;
    if factors.len() != targets.len() || j.space.num_axes() != targets.len() {
        return Err(Error::Structure(format!(
            "joint has {} output factors and {} axes but {} targets given",
            factors.len(),
            j.space.num_axes(),
            targets.len()
        )));
    }
    let measured = j.measured_observable()?;
    let mut instrument_deviations = Vec::with_capacity(targets.len());
    let mut observable_deviations = Vec::with_capacity(targets.len());
    for (i, t) in targets.iter().enumerate() {
        if t.in_dim != j.in_dim {
            return Err(Error::Structure(format!(
                "target {i} acts on dimension {} but the joint on {}",
                t.in_dim, j.in_dim
            )));
        }
        if t.out_dim != factors.dims()[i] {
            return Err(mismatch(format!("target {i} output dimension {}", factors.dims()[i]), t.out_dim));
        }
        let reduced = j.marginal(i)?.reduced(i, factors)?;
        if reduced.space != t.space {
            return Err(Error::Structure(format!(
                "target {i} outcomes {} differ from joint axis {}",
                t.space, reduced.space
            )));
        }
        instrument_deviations.push(reduced.deviation(t));
        observable_deviations.push(measured.marginal(i)?.deviation(&t.measured_observable()?));
    }
    let observables_pass = observable_deviations.iter().all(|&d| tol.accepts(d));
    let pass = observables_pass && instrument_deviations.iter().all(|&d| tol.accepts(d));
    Ok(JointInstrumentReport { instrument_deviations, observable_deviations, pass, observables_pass })
}

/// Product-structure check for instruments: parts `f_i(I)` against the marginals
/// of `I` re-indexed by `h`, compared extensionally.
pub fn verify_instrument_product_structure<T: Real>(
    inst: &Instrument<T>,
    fs: &[OutcomeMap],
    tol: Tolerance<T>,
) -> Result<ProductStructureReport<T>> {
    let check = product_structure(&inst.space, fs)?;
    let part_deviations = match &check {
        ProductCheck::Bijection { product, h } => {
            let grid = inst.reindexed(product, h)?;
            fs.iter()
                .enumerate()
                .map(|(i, f)| Ok(inst.part(f)?.deviation(&grid.marginal(i)?)))
                .collect::<Result<Vec<_>>>()?
        }
        ProductCheck::BadIntersection { .. } => Vec::new(),
    };
    let pass = matches!(check, ProductCheck::Bijection { .. }) && part_deviations.iter().all(|&d| tol.accepts(d));
    Ok(ProductStructureReport { check, part_deviations, pass })
}
