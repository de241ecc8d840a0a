//! JSON forms of matrices, observables and instruments.
//!
//! A matrix is an array of rows; an entry is `[re, im]` or a bare real number.
//! Observables are `{dim, axes, effects: {key: matrix}}` and instruments
//! `{space, in_dim, out_dim, out_factors?, operations: {key: [matrix, …]}}`,
//! keys joining tuple components with `|`.

use std::collections::BTreeMap;

use qmulti_core::{
    Complex, ComplexMatrix, FactorDims, InstrumentF64, ObservableF64, OperationF64, OutcomeSpace, ToleranceF64,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Entry {
    Complex([f64; 2]),
    Real(f64),
}

impl Entry {
    fn value(self) -> Complex<f64> {
        match self {
            Entry::Complex([re, im]) => Complex::new(re, im),
            Entry::Real(re) => Complex::new(re, 0.0),
        }
    }
}

/// A matrix given inline or by the name of a declared matrix or state.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum MatrixRef {
    Name(String),
    Literal(Vec<Vec<Entry>>),
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableDoc {
    pub dim: usize,
    pub axes: Vec<Vec<String>>,
    pub effects: BTreeMap<String, MatrixRef>,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentDoc {
    pub space: Vec<Vec<String>>,
    pub in_dim: usize,
    pub out_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_factors: Option<Vec<usize>>,
    pub operations: BTreeMap<String, Vec<MatrixRef>>,
}

pub fn matrix_from_rows(rows: &[Vec<Entry>]) -> Result<ComplexMatrix, String> {
    ComplexMatrix::from_rows(rows.iter().map(|r| r.iter().map(|e| e.value()).collect()).collect())
        .map_err(|e| e.to_string())
}

pub fn matrix_to_json(m: &ComplexMatrix) -> Value {
    Value::Array((0..m.rows()).map(|i| Value::Array(m.row(i).iter().map(|z| json!([z.re, z.im])).collect())).collect())
}

/// Builds a matrix, resolving names through `lookup`.
pub fn resolve_matrix(r: &MatrixRef, lookup: &dyn Fn(&str) -> Option<ComplexMatrix>) -> Result<ComplexMatrix, String> {
    match r {
        MatrixRef::Literal(rows) => matrix_from_rows(rows),
        MatrixRef::Name(n) => lookup(n).ok_or_else(|| format!("unknown matrix {n:?}")),
    }
}

fn check_square(m: &ComplexMatrix, dim: usize, what: &str) -> Result<(), String> {
    if m.shape() != (dim, dim) {
        return Err(format!("{what} is {}x{}, expected {dim}x{dim}", m.rows(), m.cols()));
    }
    Ok(())
}

/// Values of `map` in the canonical order of `space`, rejecting missing or extra keys.
fn in_space_order<'a, V>(space: &OutcomeSpace, map: &'a BTreeMap<String, V>, what: &str) -> Result<Vec<&'a V>, String> {
    if let Some(extra) = map.keys().find(|k| space.index_of_key(k).is_err()) {
        return Err(format!("{what} key {extra:?} is not an outcome"));
    }
    space.keys().map(|k| map.get(&k).ok_or_else(|| format!("no {what} for outcome {k:?}"))).collect()
}

pub fn observable_from_doc(
    doc: &ObservableDoc,
    tol: ToleranceF64,
    lookup: &dyn Fn(&str) -> Option<ComplexMatrix>,
) -> Result<ObservableF64, String> {
    let space = OutcomeSpace::new(doc.axes.clone()).map_err(|e| e.to_string())?;
    let mut effects = Vec::with_capacity(space.len());
    for (k, r) in space.keys().zip(in_space_order(&space, &doc.effects, "effect")?) {
        let m = resolve_matrix(r, lookup).map_err(|e| format!("effect {k:?}: {e}"))?;
        check_square(&m, doc.dim, &format!("effect {k:?}"))?;
        effects.push(m);
    }
    ObservableF64::new(space, effects, tol).map_err(|e| e.to_string())
}

pub fn instrument_from_doc(
    doc: &InstrumentDoc,
    tol: ToleranceF64,
    lookup: &dyn Fn(&str) -> Option<ComplexMatrix>,
) -> Result<InstrumentF64, String> {
    let space = OutcomeSpace::new(doc.space.clone()).map_err(|e| e.to_string())?;
    let mut ops = Vec::with_capacity(space.len());
    for (k, list) in space.keys().zip(in_space_order(&space, &doc.operations, "operation")?) {
        let kraus = list
            .iter()
            .map(|r| {
                let m = resolve_matrix(r, lookup)?;
                if m.shape() != (doc.out_dim, doc.in_dim) {
                    return Err(format!(
                        "Kraus operator is {}x{}, expected {}x{}",
                        m.rows(),
                        m.cols(),
                        doc.out_dim,
                        doc.in_dim
                    ));
                }
                Ok(m)
            })
            .collect::<Result<Vec<_>, String>>()
            .map_err(|e| format!("operation {k:?}: {e}"))?;
        ops.push(OperationF64::new(kraus, tol).map_err(|e| format!("operation {k:?}: {e}"))?);
    }
    let inst = InstrumentF64::new(space, ops, tol).map_err(|e| e.to_string())?;
    match &doc.out_factors {
        Some(f) => {
            FactorDims::new(f.clone()).and_then(|f| inst.with_out_factors(f)).map_err(|e| format!("out_factors: {e}"))
        }
        None => Ok(inst),
    }
}

pub fn observable_to_json(a: &ObservableF64) -> Value {
    let mut effects = Map::new();
    for (k, e) in a.space().keys().zip(a.effects()) {
        effects.insert(k, matrix_to_json(e));
    }
    json!({ "dim": a.dim(), "axes": a.space().axes(), "effects": effects })
}

pub fn instrument_to_json(i: &InstrumentF64) -> Value {
    let mut ops = Map::new();
    for (k, op) in i.space().keys().zip(i.operations()) {
        ops.insert(k, Value::Array(op.kraus().iter().map(matrix_to_json).collect()));
    }
    let mut out = Map::new();
    out.insert("space".into(), json!(i.space().axes()));
    out.insert("in_dim".into(), json!(i.in_dim()));
    out.insert("out_dim".into(), json!(i.out_dim()));
    if let Some(f) = i.out_factors() {
        out.insert("out_factors".into(), json!(f.dims()));
    }
    out.insert("operations".into(), Value::Object(ops));
    Value::Object(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn none(_: &str) -> Option<ComplexMatrix> {
        None
    }

    #[test]
    fn entries_accept_pairs_and_reals() {
        let r: MatrixRef = serde_json::from_str("[[1, [0, -1]], [[0, 1], 2.5]]").unwrap();
        let m = resolve_matrix(&r, &none).unwrap();
        assert_eq!(m[(0, 1)], Complex::new(0.0, -1.0));
        assert_eq!(m[(1, 1)], Complex::new(2.5, 0.0));
        let r: MatrixRef = serde_json::from_str("\"plus\"").unwrap();
        assert!(resolve_matrix(&r, &none).is_err());
        let ragged: MatrixRef = serde_json::from_str("[[1, 0], [1]]").unwrap();
        assert!(resolve_matrix(&ragged, &none).is_err());
    }

    #[test]
    fn observable_keys_must_match_space() {
        let doc: ObservableDoc = serde_json::from_value(json!({
            "dim": 2, "axes": [["0", "1"]],
            "effects": { "0": [[1, 0], [0, 0]], "2": [[0, 0], [0, 1]] }
        }))
        .unwrap();
        let err = observable_from_doc(&doc, ToleranceF64::default(), &none).unwrap_err();
        assert!(err.contains("\"2\""), "{err}");
    }

    #[test]
    fn observable_round_trip() {
        let doc: ObservableDoc = serde_json::from_value(json!({
            "dim": 2, "axes": [["a", "b"], ["x"]],
            "effects": { "a|x": [[0.25, 0], [0, 0.5]], "b|x": [[0.75, 0], [0, 0.5]] }
        }))
        .unwrap();
        let a = observable_from_doc(&doc, ToleranceF64::default(), &none).unwrap();
        let back: ObservableDoc = serde_json::from_value(observable_to_json(&a)).unwrap();
        assert_eq!(observable_from_doc(&back, ToleranceF64::default(), &none).unwrap(), a);
    }
}
