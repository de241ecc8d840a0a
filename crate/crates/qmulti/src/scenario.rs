//! Scenario documents: declarations plus an ordered task list.
//!
//! Parsing resolves every name and validates every declaration up front, so a
//! document that parses can only fail at run time through the computations
//! themselves (dimension mismatches, verification failures and the like).

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use qmulti_core::{ComplexMatrix, InstrumentF64, ObservableF64, StateF64, Tolerance, ToleranceF64};
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::literal::{self, Entry, InstrumentDoc, MatrixRef, ObservableDoc};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("syntax: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
}

fn invalid(location: impl Into<String>, message: impl fmt::Display) -> ParseError {
    ParseError::Invalid { location: location.into(), message: message.to_string() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Matrix,
    State,
    Observable,
    Instrument,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Matrix => "matrix",
            Kind::State => "state",
            Kind::Observable => "observable",
            Kind::Instrument => "instrument",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Matrix(ComplexMatrix),
    State(StateF64),
    Observable(ObservableF64),
    Instrument(InstrumentF64),
}

impl Item {
    pub fn kind(&self) -> Kind {
        match self {
            Item::Matrix(_) => Kind::Matrix,
            Item::State(_) => Kind::State,
            Item::Observable(_) => Kind::Observable,
            Item::Instrument(_) => Kind::Instrument,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Item::Matrix(m) => literal::matrix_to_json(m),
            Item::State(s) => literal::matrix_to_json(s.matrix()),
            Item::Observable(a) => literal::observable_to_json(a),
            Item::Instrument(i) => literal::instrument_to_json(i),
        }
    }

    /// Matrix view used when resolving matrix names inside literals.
    pub fn as_matrix(&self) -> Option<ComplexMatrix> {
        match self {
            Item::Matrix(m) => Some(m.clone()),
            Item::State(s) => Some(s.matrix().clone()),
            _ => None,
        }
    }
}

/// A task argument: a declared (or bound) name, or an inline literal.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Arg {
    Name(String),
    Inline(Value),
}

impl Arg {
    fn inline_kind(v: &Value) -> Option<Kind> {
        match v {
            Value::Array(_) => Some(Kind::Matrix),
            Value::Object(o) if o.contains_key("effects") => Some(Kind::Observable),
            Value::Object(o) if o.contains_key("operations") => Some(Kind::Instrument),
            _ => None,
        }
    }
}

/// Task kinds and their arguments, as written under `kind` / `args`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", content = "args", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskArgs {
    Validate { target: Arg },
    Distribution { source: Arg, state: Arg, delta: Option<Vec<String>> },
    Marginal { source: Arg, axis: usize },
    Reduce { source: Arg, factor: usize, dims: Option<Vec<usize>> },
    Tensor { parts: Vec<Arg> },
    Sequential { parts: Vec<Arg> },
    Luders { source: Option<Arg>, parts: Option<Vec<Arg>> },
    Holevo { observable: Arg, alphas: BTreeMap<String, Arg> },
    Part { source: Arg, map: BTreeMap<String, String> },
    SeqProduct { first: Arg, instrument: Arg, then: Arg },
    Conditioned { observable: Arg, instrument: Arg, given: Arg },
    VerifyJoint { joint: Arg, targets: Vec<Arg> },
    VerifyJointInstrument { joint: Arg, targets: Vec<Arg> },
    VerifyProductStructure { source: Arg, maps: Vec<BTreeMap<String, String>> },
    Sample { instruments: Vec<Arg>, state: Arg, steps: Option<usize>, trajectories: usize, seed: u64 },
}

const OBS: &[Kind] = &[Kind::Observable];
const INST: &[Kind] = &[Kind::Instrument];
const EITHER: &[Kind] = &[Kind::Observable, Kind::Instrument];
const STATE: &[Kind] = &[Kind::State, Kind::Matrix];
const ANY: &[Kind] = &[Kind::Matrix, Kind::State, Kind::Observable, Kind::Instrument];

impl TaskArgs {
    pub fn kind(&self) -> &'static str {
        match self {
            TaskArgs::Validate { .. } => "validate",
            TaskArgs::Distribution { .. } => "distribution",
            TaskArgs::Marginal { .. } => "marginal",
            TaskArgs::Reduce { .. } => "reduce",
            TaskArgs::Tensor { .. } => "tensor",
            TaskArgs::Sequential { .. } => "sequential",
            TaskArgs::Luders { .. } => "luders",
            TaskArgs::Holevo { .. } => "holevo",
            TaskArgs::Part { .. } => "part",
            TaskArgs::SeqProduct { .. } => "seq-product",
            TaskArgs::Conditioned { .. } => "conditioned",
            TaskArgs::VerifyJoint { .. } => "verify-joint",
            TaskArgs::VerifyJointInstrument { .. } => "verify-joint-instrument",
            TaskArgs::VerifyProductStructure { .. } => "verify-product-structure",
            TaskArgs::Sample { .. } => "sample",
        }
    }

    /// Every argument with the kinds it may have, labelled for diagnostics.
    fn arguments(&self) -> Vec<(String, &Arg, &'static [Kind])> {
        let mut out: Vec<(String, &Arg, &'static [Kind])> = Vec::new();
        match self {
            TaskArgs::Validate { target } => out.push(("target".into(), target, ANY)),
            TaskArgs::Distribution { source, state, .. } => {
                out.push(("source".into(), source, EITHER));
                out.push(("state".into(), state, STATE));
            }
            TaskArgs::Marginal { source, .. }
            | TaskArgs::Reduce { source, .. }
            | TaskArgs::Part { source, .. }
            | TaskArgs::VerifyProductStructure { source, .. } => out.push(("source".into(), source, EITHER)),
            TaskArgs::Tensor { parts } => {
                out.extend(parts.iter().enumerate().map(|(i, a)| (format!("parts[{i}]"), a, EITHER)))
            }
            TaskArgs::Sequential { parts } => {
                out.extend(parts.iter().enumerate().map(|(i, a)| (format!("parts[{i}]"), a, INST)))
            }
            TaskArgs::Luders { source, parts } => {
                out.extend(source.iter().map(|a| ("source".to_string(), a, OBS)));
                if let Some(list) = parts {
                    out.extend(list.iter().enumerate().map(|(i, a)| (format!("parts[{i}]"), a, OBS)));
                }
            }
            TaskArgs::Holevo { observable, alphas } => {
                out.push(("observable".into(), observable, OBS));
                out.extend(alphas.iter().map(|(k, a)| (format!("alphas.{k}"), a, STATE)));
            }
            TaskArgs::SeqProduct { first, instrument, then } => {
                out.push(("first".into(), first, OBS));
                out.push(("instrument".into(), instrument, INST));
                out.push(("then".into(), then, OBS));
            }
            TaskArgs::Conditioned { observable, instrument, given } => {
                out.push(("observable".into(), observable, OBS));
                out.push(("instrument".into(), instrument, INST));
                out.push(("given".into(), given, OBS));
            }
            TaskArgs::VerifyJoint { joint, targets } => {
                out.push(("joint".into(), joint, OBS));
                out.extend(targets.iter().enumerate().map(|(i, a)| (format!("targets[{i}]"), a, OBS)));
            }
            TaskArgs::VerifyJointInstrument { joint, targets } => {
                out.push(("joint".into(), joint, INST));
                out.extend(targets.iter().enumerate().map(|(i, a)| (format!("targets[{i}]"), a, INST)));
            }
            TaskArgs::Sample { instruments, state, .. } => {
                out.extend(instruments.iter().enumerate().map(|(i, a)| (format!("instruments[{i}]"), a, INST)));
                out.push(("state".into(), state, STATE));
            }
        }
        out
    }

    /// Kind of the object the task produces, if it produces one that can be bound.
    /// `first` is the kind of the first argument.
    fn output_kind(&self, first: Kind) -> Option<Kind> {
        match self {
            TaskArgs::Marginal { .. } | TaskArgs::Reduce { .. } | TaskArgs::Part { .. } | TaskArgs::Tensor { .. } => {
                Some(first)
            }
            TaskArgs::Sequential { .. } | TaskArgs::Holevo { .. } => Some(Kind::Instrument),
            TaskArgs::Luders { source: Some(_), .. } => Some(Kind::Instrument),
            TaskArgs::Luders { .. } | TaskArgs::SeqProduct { .. } | TaskArgs::Conditioned { .. } => {
                Some(Kind::Observable)
            }
            _ => None,
        }
    }

    fn check_shape(&self) -> Result<(), String> {
        match self {
            TaskArgs::Luders { source: Some(_), parts: Some(_) } | TaskArgs::Luders { source: None, parts: None } => {
                Err("luders takes exactly one of `source` or `parts`".into())
            }
            TaskArgs::Luders { parts: Some(p), .. } if p.is_empty() => Err("`parts` is empty".into()),
            TaskArgs::Tensor { parts } if parts.len() < 2 => Err("tensor needs at least two parts".into()),
            TaskArgs::Sequential { parts } if parts.is_empty() => Err("`parts` is empty".into()),
            TaskArgs::Sample { instruments, .. } if instruments.is_empty() => Err("`instruments` is empty".into()),
            TaskArgs::Sample { trajectories: 0, .. } => Err("`trajectories` must be positive".into()),
            TaskArgs::Sample { steps: Some(0), .. } => Err("`steps` must be positive".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    pub value: Value,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Task {
    pub name: String,
    pub args: TaskArgs,
    pub bind: Option<String>,
    pub expected: Option<Expected>,
    /// Indices of earlier tasks whose bound results this task reads.
    pub deps: Vec<usize>,
}

impl Task {
    pub fn kind(&self) -> &'static str {
        self.args.kind()
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub tolerance: ToleranceF64,
    pub declarations: HashMap<String, Item>,
    pub tasks: Vec<Task>,
}

impl Scenario {
    pub fn task_index(&self, name: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.name == name)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    tolerance: Option<f64>,
    #[serde(default)]
    matrices: BTreeMap<String, Vec<Vec<Entry>>>,
    #[serde(default)]
    states: BTreeMap<String, MatrixRef>,
    #[serde(default)]
    observables: BTreeMap<String, ObservableDoc>,
    #[serde(default)]
    instruments: BTreeMap<String, InstrumentDoc>,
    #[serde(default)]
    tasks: Vec<TaskRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskRecord {
    name: String,
    kind: String,
    #[serde(default)]
    args: Value,
    bind: Option<String>,
    expected: Option<Expected>,
}

/// Where a name came from: a declaration or the binding of task `index`.
#[derive(Clone, Copy)]
struct NameInfo {
    kind: Kind,
    bound_by: Option<usize>,
}

/// Parses and validates a scenario. `tol_override` replaces the document tolerance.
pub fn parse_scenario(text: &str, tol_override: Option<f64>) -> Result<Scenario, ParseError> {
    let doc: Document = serde_json::from_str(text)?;
    let eps = tol_override.or(doc.tolerance).unwrap_or(1e-9);
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(invalid("tolerance", format!("{eps} is not a nonnegative number")));
    }
    let tol = Tolerance::new(eps);

    let mut decls: HashMap<String, Item> = HashMap::new();
    let mut names: HashMap<String, NameInfo> = HashMap::new();
    let mut declare = |section: &str, name: &str, item: Item, decls: &mut HashMap<String, Item>| {
        if names.contains_key(name) {
            return Err(invalid(format!("{section}.{name}"), "name declared twice"));
        }
        names.insert(name.to_string(), NameInfo { kind: item.kind(), bound_by: None });
        decls.insert(name.to_string(), item);
        Ok(())
    };

    for (name, rows) in &doc.matrices {
        let m = literal::matrix_from_rows(rows).map_err(|e| invalid(format!("matrices.{name}"), e))?;
        declare("matrices", name, Item::Matrix(m), &mut decls)?;
    }
    for (name, r) in &doc.states {
        let loc = format!("states.{name}");
        let m =
            literal::resolve_matrix(r, &|n| decls.get(n).and_then(Item::as_matrix)).map_err(|e| invalid(&loc, e))?;
        let s = StateF64::new(m, tol).map_err(|e| invalid(&loc, e))?;
        declare("states", name, Item::State(s), &mut decls)?;
    }
    for (name, d) in &doc.observables {
        let a = literal::observable_from_doc(d, tol, &|n| decls.get(n).and_then(Item::as_matrix))
            .map_err(|e| invalid(format!("observables.{name}"), e))?;
        declare("observables", name, Item::Observable(a), &mut decls)?;
    }
    for (name, d) in &doc.instruments {
        let i = literal::instrument_from_doc(d, tol, &|n| decls.get(n).and_then(Item::as_matrix))
            .map_err(|e| invalid(format!("instruments.{name}"), e))?;
        declare("instruments", name, Item::Instrument(i), &mut decls)?;
    }

    let mut tasks: Vec<Task> = Vec::with_capacity(doc.tasks.len());
    for (index, rec) in doc.tasks.into_iter().enumerate() {
        let loc = format!("tasks[{index}] ({})", rec.name);
        if tasks.iter().any(|t| t.name == rec.name) {
            return Err(invalid(loc, "task name used twice"));
        }
        let args: TaskArgs = serde_json::from_value(serde_json::json!({ "kind": rec.kind, "args": rec.args }))
            .map_err(|e| invalid(&loc, e))?;
        args.check_shape().map_err(|e| invalid(&loc, e))?;

        let mut deps = Vec::new();
        let mut kinds = Vec::new();
        for (label, arg, allowed) in args.arguments() {
            let kind = match arg {
                Arg::Name(n) => {
                    let info = names.get(n).ok_or_else(|| invalid(&loc, format!("{label}: unknown name {n:?}")))?;
                    deps.extend(info.bound_by);
                    info.kind
                }
                Arg::Inline(v) => {
                    let kind = Arg::inline_kind(v)
                        .ok_or_else(|| invalid(&loc, format!("{label}: not a matrix, observable or instrument")))?;
                    check_inline(v, kind).map_err(|e| invalid(&loc, format!("{label}: {e}")))?;
                    kind
                }
            };
            let ok = allowed.contains(&kind) || (kind == Kind::Matrix && allowed.contains(&Kind::State));
            if !ok {
                let want: Vec<String> = allowed.iter().map(Kind::to_string).collect();
                return Err(invalid(&loc, format!("{label}: expected {}, found {kind}", want.join(" or "))));
            }
            kinds.push(kind);
        }
        if matches!(args, TaskArgs::Tensor { .. }) && kinds.iter().any(|&k| k != kinds[0]) {
            return Err(invalid(&loc, "tensor parts must all be observables or all instruments"));
        }
        let output = args.output_kind(kinds[0]);

        if let Some(exp) = &rec.expected {
            if exp.tol.is_some_and(|t| !(t.is_finite() && t >= 0.0)) {
                return Err(invalid(&loc, "expected.tol must be a nonnegative number"));
            }
            if let (Value::String(n), Some(k)) = (&exp.value, output) {
                let info = names.get(n).ok_or_else(|| invalid(&loc, format!("expected: unknown name {n:?}")))?;
                if info.kind != k {
                    return Err(invalid(&loc, format!("expected: {n:?} is a {}, result is a {k}", info.kind)));
                }
                deps.extend(info.bound_by);
            }
        }
        if let Some(b) = &rec.bind {
            let k = output.ok_or_else(|| invalid(&loc, format!("{} results cannot be bound", args.kind())))?;
            if names.contains_key(b) {
                return Err(invalid(&loc, format!("bind: name {b:?} already in use")));
            }
            names.insert(b.clone(), NameInfo { kind: k, bound_by: Some(index) });
        }
        deps.sort_unstable();
        deps.dedup();
        tasks.push(Task { name: rec.name, args, bind: rec.bind, expected: rec.expected, deps });
    }
    Ok(Scenario { tolerance: tol, declarations: decls, tasks })
}

/// Structural check of an inline literal; validation happens when the task runs.
fn check_inline(v: &Value, kind: Kind) -> Result<(), String> {
    let r = match kind {
        Kind::Matrix | Kind::State => serde_json::from_value::<MatrixRef>(v.clone()).map(drop),
        Kind::Observable => serde_json::from_value::<ObservableDoc>(v.clone()).map(drop),
        Kind::Instrument => serde_json::from_value::<InstrumentDoc>(v.clone()).map(drop),
    };
    r.map_err(|e| e.to_string())
}
