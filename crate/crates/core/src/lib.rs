//! Multi-observables and multi-instruments on finite-dimensional Hilbert spaces.
//!
//! The library is generic over the real scalar type ([`Real`]: `f32` or `f64`);
//! the aliases at the crate root fix it to `f64`, which is what the scenario
//! runner and CLI use.
//!
//! ```
//! use qmulti_core::{construct_luders, ComplexMatrix, ObservableF64, Tolerance};
//!
//! let tol = Tolerance::default();
//! let a = ObservableF64::from_labelled(
//!     [("0", ComplexMatrix::diag(&[0.75, 0.25])), ("1", ComplexMatrix::diag(&[0.25, 0.75]))],
//!     tol,
//! )
//! .unwrap();
//! let luders = construct_luders(&a).unwrap();
//! assert!(luders.measured_observable().unwrap().deviation(&a) < 1e-12);
//! ```

pub mod error;
pub mod factors;
pub mod instrument;
pub mod linalg;
pub mod matrix;
pub mod observable;
pub mod operation;
pub mod outcome;
pub mod random;
pub mod scalar;
pub mod state;
pub mod tolerance;

pub use error::{EffectViolation, Error, Result};
pub use factors::{partial_trace, reduce_to, FactorDims};
pub use instrument::{
    conditioned_observable, construct_holevo, construct_kraus, construct_luders, seq_product_observables,
    sequential_instruments, tensor_instruments, verify_instrument_product_structure, verify_joint_instrument,
    Instrument, JointInstrumentReport,
};
pub use linalg::{eigh, psd_sqrt, validate_effect, HermitianEigen};
pub use matrix::{kron_all, Matrix};
pub use observable::{
    commuting_joint, luders_sequential, tensor_observables, verify_joint, verify_product_structure, Distribution,
    JointReport, Observable, ProductStructureReport,
};
pub use operation::Operation;
pub use outcome::{product_structure, OutcomeMap, OutcomeSpace, ProductCheck, KEY_DELIMITER};
pub use scalar::Real;
pub use state::State;
pub use tolerance::Tolerance;

pub use num_complex::Complex;

pub type ComplexMatrix = Matrix<f64>;
pub type ComplexMatrixF32 = Matrix<f32>;
pub type ObservableF64 = Observable<f64>;
pub type OperationF64 = Operation<f64>;
pub type InstrumentF64 = Instrument<f64>;
pub type StateF64 = State<f64>;
pub type ToleranceF64 = Tolerance<f64>;
pub type DistributionF64 = Distribution<f64>;
