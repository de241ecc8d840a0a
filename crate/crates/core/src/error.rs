use std::fmt;

use thiserror::Error;

/// Why a matrix failed to be an effect.
#[derive(Clone, Debug, PartialEq)]
pub enum EffectViolation {
    NotSquare { rows: usize, cols: usize },
    NotHermitian { deviation: f64 },
    EigenvalueBelowZero { eigenvalue: f64 },
    EigenvalueAboveOne { eigenvalue: f64 },
}

impl fmt::Display for EffectViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotSquare { rows, cols } => write!(f, "not square ({rows}x{cols})"),
            Self::NotHermitian { deviation } => {
                write!(f, "not Hermitian (max |m - m*| = {deviation:e})")
            }
            Self::EigenvalueBelowZero { eigenvalue } => write!(f, "eigenvalue {eigenvalue} < 0"),
            Self::EigenvalueAboveOne { eigenvalue } => write!(f, "eigenvalue {eigenvalue} > 1"),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum Error {
    #[error("matrix shape invalid: {0}")]
    Shape(String),
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("factor dimensions invalid: {0}")]
    Factors(String),
    #[error("matrix not Hermitian (max |m - m*| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix not PSD: eigenvalue {eigenvalue}")]
    NotPsd { eigenvalue: f64 },
    #[error("eigendecomposition did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("effect {label}: {violation}")]
    InvalidEffect { label: String, violation: EffectViolation },
    #[error("invalid observable: {}", .problems.join("; "))]
    InvalidObservable {
        problems: Vec<String>,
        /// `sum_x A_x - I`, row-major, when completeness failed.
        residual: Option<Vec<(f64, f64)>>,
    },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("operation not trace non-increasing: largest eigenvalue of sum K*K is {eigenvalue}")]
    NotTraceNonIncreasing { eigenvalue: f64 },
    #[error("operations do not sum to a channel: max |sum K*K - I| = {residual:e}")]
    NotChannel { residual: f64 },
    #[error("outcome space invalid: {0}")]
    OutcomeSpace(String),
    #[error("unknown outcome {0:?}")]
    UnknownOutcome(String),
    #[error("outcome map not surjective: target {0:?} has no preimage")]
    NotSurjective(String),
    #[error("outcome map image has a single element; product structure needs at least 2")]
    TrivialMap { index: usize },
    #[error("axis {axis} out of range for {axes} axes")]
    AxisOutOfRange { axis: usize, axes: usize },
    #[error("construction not applicable: effects do not commute (max |[X, Y]| = {norm:e})")]
    NotCommuting { norm: f64 },
    #[error("instrument does not measure the given observable (max deviation {deviation:e})")]
    DoesNotMeasure { deviation: f64 },
    #[error("structure mismatch: {0}")]
    Structure(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn mismatch(expected: impl fmt::Display, found: impl fmt::Display) -> Error {
    Error::DimensionMismatch { expected: expected.to_string(), found: found.to_string() }
}
