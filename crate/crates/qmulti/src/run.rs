//! Task execution.
//!
//! Tasks read an environment of declarations plus the objects bound by earlier
//! tasks. A task whose computation fails is reported as an error and binds
//! nothing; later tasks reading that name then error too.

use std::collections::HashMap;
use std::time::Instant;

use qmulti_core::{
    conditioned_observable, construct_holevo, construct_luders, luders_sequential, seq_product_observables,
    sequential_instruments, tensor_instruments, tensor_observables, validate_effect,
    verify_instrument_product_structure, verify_joint, verify_joint_instrument, verify_product_structure,
    ComplexMatrix, FactorDims, InstrumentF64, ObservableF64, OutcomeMap, OutcomeSpace, ProductCheck,
    ProductStructureReport, StateF64, ToleranceF64,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::literal::{self, InstrumentDoc, MatrixRef, ObservableDoc};
use crate::report::{Report, Status, TaskReport};
use crate::sample::{sample_outcomes, summarize, SampleSummary};
use crate::scenario::{Arg, Item, Scenario, Task, TaskArgs};

/// Width of the acceptance band for sampled frequencies, in binomial standard deviations.
pub const SAMPLE_SIGMAS: f64 = 4.0;

pub type Env = HashMap<String, Item>;

/// What a task computed, before it is judged against `expected`.
#[derive(Clone, Debug, Default)]
pub struct Computed {
    pub value: Value,
    /// Object produced by the task (bindable), if any.
    pub item: Option<Item>,
    /// Built-in verdict of validate / verify / sample tasks.
    pub verdict: Option<bool>,
    pub deviation: Option<f64>,
    pub detail: Option<String>,
}

impl Computed {
    fn object(item: Item) -> Self {
        Computed { value: item.to_json(), item: Some(item), ..Default::default() }
    }

    fn verdict(value: Value, pass: bool, deviation: Option<f64>, detail: Option<String>) -> Self {
        Computed { value, item: None, verdict: Some(pass), deviation, detail }
    }
}

fn lookup(env: &Env) -> impl Fn(&str) -> Option<ComplexMatrix> + '_ {
    move |n| env.get(n).and_then(Item::as_matrix)
}

pub fn resolve(arg: &Arg, env: &Env, tol: ToleranceF64) -> Result<Item, String> {
    match arg {
        Arg::Name(n) => env.get(n).cloned().ok_or_else(|| format!("input {n:?} unavailable")),
        Arg::Inline(v) => resolve_inline(v, env, tol),
    }
}

fn resolve_inline(v: &Value, env: &Env, tol: ToleranceF64) -> Result<Item, String> {
    let from = |e: serde_json::Error| e.to_string();
    match v {
        Value::Array(_) => {
            let r: MatrixRef = serde_json::from_value(v.clone()).map_err(from)?;
            literal::resolve_matrix(&r, &lookup(env)).map(Item::Matrix)
        }
        Value::Object(o) if o.contains_key("effects") => {
            let d: ObservableDoc = serde_json::from_value(v.clone()).map_err(from)?;
            literal::observable_from_doc(&d, tol, &lookup(env)).map(Item::Observable)
        }
        Value::Object(o) if o.contains_key("operations") => {
            let d: InstrumentDoc = serde_json::from_value(v.clone()).map_err(from)?;
            literal::instrument_from_doc(&d, tol, &lookup(env)).map(Item::Instrument)
        }
        _ => Err("not a matrix, observable or instrument".into()),
    }
}

fn observable(arg: &Arg, env: &Env, tol: ToleranceF64) -> Result<ObservableF64, String> {
    match resolve(arg, env, tol)? {
        Item::Observable(a) => Ok(a),
        other => Err(format!("expected an observable, found a {}", other.kind())),
    }
}

fn instrument(arg: &Arg, env: &Env, tol: ToleranceF64) -> Result<InstrumentF64, String> {
    match resolve(arg, env, tol)? {
        Item::Instrument(i) => Ok(i),
        other => Err(format!("expected an instrument, found a {}", other.kind())),
    }
}

fn state(arg: &Arg, env: &Env, tol: ToleranceF64) -> Result<StateF64, String> {
    match resolve(arg, env, tol)? {
        Item::State(s) => Ok(s),
        Item::Matrix(m) => StateF64::new(m, tol).map_err(|e| e.to_string()),
        other => Err(format!("expected a state, found a {}", other.kind())),
    }
}

fn outcome_map(space: &OutcomeSpace, map: &std::collections::BTreeMap<String, String>) -> Result<OutcomeMap, String> {
    OutcomeMap::from_pairs(space, map.iter().map(|(k, v)| (k.as_str(), v.as_str()))).map_err(|e| e.to_string())
}

fn err<E: ToString>(e: E) -> String {
    e.to_string()
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, &d| m.max(d))
}

fn product_report(space: &OutcomeSpace, r: &ProductStructureReport<f64>) -> (Value, Option<String>) {
    match &r.check {
        ProductCheck::Bijection { product, h } => {
            let mut bij = Map::new();
            for (x, &t) in h.iter().enumerate() {
                bij.insert(space.key(x), json!(product.labels(t)));
            }
            let v = json!({ "pass": r.pass, "bijection": bij, "part_deviations": r.part_deviations });
            (v, None)
        }
        ProductCheck::BadIntersection { tuple, count } => {
            let v = json!({ "pass": false, "bad_intersection": { "tuple": tuple, "count": count } });
            (v, Some(format!("preimage of ({}) has {count} elements", tuple.join(", "))))
        }
    }
}

pub fn summary_json(s: &SampleSummary, seed: u64, steps: usize) -> Value {
    let n = s.trajectories as f64;
    let mut counts = Map::new();
    let mut freqs = Map::new();
    let mut analytic = Map::new();
    for (x, k) in s.space.keys().enumerate() {
        counts.insert(k.clone(), json!(s.counts[x]));
        freqs.insert(k.clone(), json!(s.counts[x] as f64 / n));
        analytic.insert(k, json!(s.analytic[x]));
    }
    json!({
        "trajectories": s.trajectories,
        "seed": seed,
        "steps": steps,
        "counts": counts,
        "frequencies": freqs,
        "analytic": analytic,
        "max_z": if s.max_z.is_finite() { json!(s.max_z) } else { Value::Null },
        "sigmas": SAMPLE_SIGMAS,
        "within_bounds": s.within,
    })
}

/// Runs a sample task with the given trajectory count and seed.
pub fn run_sample(
    instruments: &[Arg],
    rho: &Arg,
    steps: Option<usize>,
    trajectories: usize,
    seed: u64,
    env: &Env,
    tol: ToleranceF64,
) -> Result<(Vec<InstrumentF64>, StateF64, usize, SampleSummary), String> {
    let chain = instruments.iter().map(|a| instrument(a, env, tol)).collect::<Result<Vec<_>, _>>()?;
    let rho0 = state(rho, env, tol)?;
    let steps = steps.unwrap_or(chain.len());
    let eps = tol.eps.max(f64::MIN_POSITIVE);
    let outcomes = sample_outcomes(&chain, &rho0, seed, steps, trajectories, eps).map_err(err)?;
    let summary = summarize(&chain, &rho0, &outcomes, steps, SAMPLE_SIGMAS, tol.eps)?;
    Ok((chain, rho0, steps, summary))
}

/// Computes one task against `env`.
pub fn compute(args: &TaskArgs, env: &Env, tol: ToleranceF64) -> Result<Computed, String> {
    use TaskArgs as T;
    Ok(match args {
        T::Validate { target } => match resolve(target, env, tol) {
            Ok(Item::Matrix(m)) => match validate_effect(&m, tol) {
                Ok(()) => Computed::verdict(json!(true), true, None, None),
                Err(e) => Computed::verdict(json!(false), false, None, Some(format!("not an effect: {e}"))),
            },
            Ok(_) => Computed::verdict(json!(true), true, None, None),
            Err(e) => Computed::verdict(json!(false), false, None, Some(e)),
        },
        T::Distribution { source, state: s, delta } => {
            let rho = state(s, env, tol)?;
            let dist = match resolve(source, env, tol)? {
                Item::Observable(a) => a.distribution(&rho),
                Item::Instrument(i) => i.distribution(&rho),
                other => return Err(format!("cannot take the distribution of a {}", other.kind())),
            }
            .map_err(err)?;
            let value = match delta {
                Some(labels) => {
                    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
                    let idx = dist.space.index_of(&refs).map_err(err)?;
                    json!(dist.probs[idx])
                }
                None => Value::Object(dist.iter().map(|(k, p)| (k, json!(p))).collect()),
            };
            Computed { value, ..Default::default() }
        }
        T::Marginal { source, axis } => Computed::object(match resolve(source, env, tol)? {
            Item::Observable(a) => Item::Observable(a.marginal(*axis).map_err(err)?),
            Item::Instrument(i) => Item::Instrument(i.marginal(*axis).map_err(err)?),
            other => return Err(format!("cannot take a marginal of a {}", other.kind())),
        }),
        T::Reduce { source, factor, dims } => {
            let dims = dims.clone().map(FactorDims::new).transpose().map_err(err)?;
            Computed::object(match (resolve(source, env, tol)?, dims) {
                (Item::Observable(a), Some(d)) => Item::Observable(a.reduced(*factor, &d).map_err(err)?),
                (Item::Observable(_), None) => return Err("reducing an observable needs `dims`".into()),
                (Item::Instrument(i), Some(d)) => Item::Instrument(i.reduced(*factor, &d).map_err(err)?),
                (Item::Instrument(i), None) => Item::Instrument(i.reduced_to(*factor).map_err(err)?),
                (other, _) => return Err(format!("cannot reduce a {}", other.kind())),
            })
        }
        T::Tensor { parts } => {
            let items = parts.iter().map(|p| resolve(p, env, tol)).collect::<Result<Vec<_>, _>>()?;
            let obs: Option<Vec<ObservableF64>> = items
                .iter()
                .map(|i| match i {
                    Item::Observable(a) => Some(a.clone()),
                    _ => None,
                })
                .collect();
            let item = match obs {
                Some(obs) => Item::Observable(tensor_observables(&obs).map_err(err)?),
                None => {
                    let insts = parts.iter().map(|p| instrument(p, env, tol)).collect::<Result<Vec<_>, _>>()?;
                    Item::Instrument(tensor_instruments(&insts).map_err(err)?)
                }
            };
            Computed::object(item)
        }
        T::Sequential { parts } => {
            let insts = parts.iter().map(|p| instrument(p, env, tol)).collect::<Result<Vec<_>, _>>()?;
            Computed::object(Item::Instrument(sequential_instruments(&insts).map_err(err)?))
        }
        T::Luders { source: Some(a), .. } => {
            Computed::object(Item::Instrument(construct_luders(&observable(a, env, tol)?).map_err(err)?))
        }
        T::Luders { parts, .. } => {
            let obs = parts.iter().flatten().map(|p| observable(p, env, tol)).collect::<Result<Vec<_>, _>>()?;
            Computed::object(Item::Observable(luders_sequential(&obs).map_err(err)?))
        }
        T::Holevo { observable: a, alphas } => {
            let a = observable(a, env, tol)?;
            if let Some(extra) = alphas.keys().find(|k| a.space().index_of_key(k).is_err()) {
                return Err(format!("alphas: {extra:?} is not an outcome"));
            }
            let states = a
                .space()
                .keys()
                .map(|k| {
                    let arg = alphas.get(&k).ok_or_else(|| format!("alphas: no state for outcome {k:?}"))?;
                    state(arg, env, tol)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Computed::object(Item::Instrument(construct_holevo(&a, &states).map_err(err)?))
        }
        T::Part { source, map } => Computed::object(match resolve(source, env, tol)? {
            Item::Observable(a) => Item::Observable(a.part(&outcome_map(a.space(), map)?).map_err(err)?),
            Item::Instrument(i) => Item::Instrument(i.part(&outcome_map(i.space(), map)?).map_err(err)?),
            other => return Err(format!("cannot take a part of a {}", other.kind())),
        }),
        T::SeqProduct { first, instrument: i, then } => {
            let a = observable(first, env, tol)?;
            let i = instrument(i, env, tol)?;
            let b = observable(then, env, tol)?;
            Computed::object(Item::Observable(seq_product_observables(&a, &i, &b, tol).map_err(err)?))
        }
        T::Conditioned { observable: b, instrument: i, given } => {
            let b = observable(b, env, tol)?;
            let i = instrument(i, env, tol)?;
            let a = observable(given, env, tol)?;
            Computed::object(Item::Observable(conditioned_observable(&b, &i, &a, tol).map_err(err)?))
        }
        T::VerifyJoint { joint, targets } => {
            let c = observable(joint, env, tol)?;
            let ts = targets.iter().map(|t| observable(t, env, tol)).collect::<Result<Vec<_>, _>>()?;
            let r = verify_joint(&c, &ts, tol).map_err(err)?;
            let dev = r.max_deviation();
            let detail = (!r.pass).then(|| format!("marginal deviations {:?}", r.deviations));
            Computed::verdict(json!({ "pass": r.pass, "deviations": r.deviations }), r.pass, Some(dev), detail)
        }
        T::VerifyJointInstrument { joint, targets } => {
            let j = instrument(joint, env, tol)?;
            let ts = targets.iter().map(|t| instrument(t, env, tol)).collect::<Result<Vec<_>, _>>()?;
            let r = verify_joint_instrument(&j, &ts, tol).map_err(err)?;
            let dev = max_of(&r.instrument_deviations).max(max_of(&r.observable_deviations));
            let detail = (!r.pass).then(|| {
                format!(
                    "instrument deviations {:?}, observable deviations {:?}",
                    r.instrument_deviations, r.observable_deviations
                )
            });
            let value = json!({
                "pass": r.pass,
                "observables_pass": r.observables_pass,
                "instrument_deviations": r.instrument_deviations,
                "observable_deviations": r.observable_deviations,
            });
            Computed::verdict(value, r.pass, Some(dev), detail)
        }
        T::VerifyProductStructure { source, maps } => {
            let (space, r) = match resolve(source, env, tol)? {
                Item::Observable(a) => {
                    let fs = maps.iter().map(|m| outcome_map(a.space(), m)).collect::<Result<Vec<_>, _>>()?;
                    (a.space().clone(), verify_product_structure(&a, &fs, tol).map_err(err)?)
                }
                Item::Instrument(i) => {
                    let fs = maps.iter().map(|m| outcome_map(i.space(), m)).collect::<Result<Vec<_>, _>>()?;
                    (i.space().clone(), verify_instrument_product_structure(&i, &fs, tol).map_err(err)?)
                }
                other => return Err(format!("cannot check the product structure of a {}", other.kind())),
            };
            let (value, mut detail) = product_report(&space, &r);
            if detail.is_none() && !r.pass {
                detail = Some(format!("part deviations {:?}", r.part_deviations));
            }
            let dev = (!r.part_deviations.is_empty()).then(|| max_of(&r.part_deviations));
            Computed::verdict(value, r.pass, dev, detail)
        }
        T::Sample { instruments, state: s, steps, trajectories, seed } => {
            let (_, _, steps, summary) = run_sample(instruments, s, *steps, *trajectories, *seed, env, tol)?;
            let detail = (!summary.within)
                .then(|| format!("an outcome frequency is {:.2} sigma from its probability", summary.max_z));
            Computed::verdict(summary_json(&summary, *seed, steps), summary.within, None, detail)
        }
    })
}

/// Deviation between an expected JSON value and a computed one: numbers compare by
/// absolute difference, arrays element-wise, objects over the expected keys; any
/// structural mismatch is infinite.
pub fn json_deviation(expected: &Value, actual: &Value) -> f64 {
    match (expected, actual) {
        (Value::Number(a), Value::Number(b)) => match (a.as_f64(), b.as_f64()) {
            (Some(a), Some(b)) => (a - b).abs(),
            _ => f64::INFINITY,
        },
        (Value::Array(a), Value::Array(b)) if a.len() == b.len() => {
            a.iter().zip(b).map(|(x, y)| json_deviation(x, y)).fold(0.0, f64::max)
        }
        (Value::Object(a), Value::Object(b)) => {
            a.iter().map(|(k, x)| b.get(k).map_or(f64::INFINITY, |y| json_deviation(x, y))).fold(0.0, f64::max)
        }
        (a, b) if a == b => 0.0,
        _ => f64::INFINITY,
    }
}

/// Deviation of a computed result from `expected`. Objects are compared
/// extensionally; a bare boolean is compared with the task verdict.
fn expected_deviation(expected: &Value, c: &Computed, env: &Env, tol: ToleranceF64) -> Result<f64, String> {
    if let (Value::Bool(b), Some(v)) = (expected, c.verdict) {
        return Ok(if *b == v { 0.0 } else { f64::INFINITY });
    }
    match &c.item {
        Some(Item::Observable(a)) => {
            let arg: Arg = serde_json::from_value(expected.clone()).map_err(err)?;
            let want = observable(&arg, env, tol).map_err(|e| format!("expected: {e}"))?;
            if want.space() != a.space() || want.dim() != a.dim() {
                return Ok(f64::INFINITY);
            }
            Ok(a.deviation(&want))
        }
        Some(Item::Instrument(i)) => {
            let arg: Arg = serde_json::from_value(expected.clone()).map_err(err)?;
            let want = instrument(&arg, env, tol).map_err(|e| format!("expected: {e}"))?;
            if want.space() != i.space() || (want.in_dim(), want.out_dim()) != (i.in_dim(), i.out_dim()) {
                return Ok(f64::INFINITY);
            }
            Ok(i.deviation(&want))
        }
        _ => Ok(json_deviation(expected, &c.value)),
    }
}

/// Runs one task and judges it.
pub fn run_task(task: &Task, env: &Env, tol: ToleranceF64) -> (TaskReport, Option<Item>) {
    let start = Instant::now();
    let mut report = TaskReport {
        name: task.name.clone(),
        kind: task.kind().to_string(),
        status: Status::Error,
        value: Value::Null,
        deviation: None,
        tolerance: None,
        detail: None,
        elapsed_ms: 0.0,
    };
    let mut item = None;
    match compute(&task.args, env, tol) {
        Err(e) => report.detail = Some(e),
        Ok(c) => {
            report.deviation = c.deviation;
            report.detail = c.detail.clone();
            report.status = if c.verdict == Some(false) { Status::Fail } else { Status::Pass };
            if let Some(exp) = &task.expected {
                let t = exp.tol.unwrap_or(tol.eps);
                report.tolerance = Some(t);
                match expected_deviation(&exp.value, &c, env, tol) {
                    Ok(d) => {
                        report.deviation = Some(d);
                        report.status = if d <= t { Status::Pass } else { Status::Fail };
                        if report.status == Status::Fail && report.detail.is_none() {
                            report.detail = Some("result differs from expected value".into());
                        }
                    }
                    Err(e) => {
                        report.status = Status::Error;
                        report.detail = Some(e);
                    }
                }
            }
            report.value = c.value;
            item = c.item;
        }
    }
    report.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    (report, item)
}

fn bind(env: &mut Env, task: &Task, item: Option<Item>) {
    if let (Some(name), Some(item)) = (&task.bind, item) {
        env.insert(name.clone(), item);
    }
}

/// Runs every task in document order. With `parallel`, tasks whose inputs are
/// ready run concurrently, level by level; the report is identical apart from timing.
pub fn run_scenario(s: &Scenario, parallel: bool) -> Report {
    let mut env: Env = s.declarations.clone();
    let mut slots: Vec<Option<TaskReport>> = vec![None; s.tasks.len()];
    if !parallel {
        for (i, t) in s.tasks.iter().enumerate() {
            let (r, item) = run_task(t, &env, s.tolerance);
            bind(&mut env, t, item);
            slots[i] = Some(r);
        }
    } else {
        let mut level = vec![0usize; s.tasks.len()];
        for (i, t) in s.tasks.iter().enumerate() {
            level[i] = t.deps.iter().map(|&d| level[d] + 1).max().unwrap_or(0);
        }
        let depth = level.iter().copied().max().map_or(0, |m| m + 1);
        for l in 0..depth {
            let batch: Vec<usize> = (0..s.tasks.len()).filter(|&i| level[i] == l).collect();
            let done: Vec<(usize, TaskReport, Option<Item>)> = batch
                .par_iter()
                .map(|&i| {
                    let (r, item) = run_task(&s.tasks[i], &env, s.tolerance);
                    (i, r, item)
                })
                .collect();
            for (i, r, item) in done {
                bind(&mut env, &s.tasks[i], item);
                slots[i] = Some(r);
            }
        }
    }
    Report { tasks: slots.into_iter().map(|r| r.expect("every task ran")).collect() }
}

/// Environment holding everything task `index` can read: declarations plus the
/// bindings of its transitive dependencies, which are run to produce them.
pub fn environment_for(s: &Scenario, index: usize) -> Env {
    let mut needed = vec![false; s.tasks.len()];
    let mut stack = s.tasks[index].deps.clone();
    while let Some(d) = stack.pop() {
        if !needed[d] {
            needed[d] = true;
            stack.extend(&s.tasks[d].deps);
        }
    }
    let mut env = s.declarations.clone();
    for (t, _) in s.tasks.iter().zip(&needed).filter(|(_, n)| **n) {
        let (_, item) = run_task(t, &env, s.tolerance);
        bind(&mut env, t, item);
    }
    env
}
