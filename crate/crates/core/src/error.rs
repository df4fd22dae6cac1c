//! Error types shared across the crate.
//!
//! Each stage of the pipeline has its own error enum so callers can match on
//! the failure class (bad input, violated assumption, failed search, blown-up
//! integration) without string inspection.

use thiserror::Error;

/// Failures of the dense numeric kernels.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum NumericsError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

/// Failures while building or evaluating a network model.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("subsystem {subsystem}: {context}")]
    BadSubsystem { subsystem: usize, context: String },
    #[error("coupling {index}: subsystem index {got} out of range (network has {count})")]
    IndexOutOfRange {
        index: usize,
        got: usize,
        count: usize,
    },
    #[error("duplicate coupling for receiver {to} from source {from}")]
    DuplicateCoupling { to: usize, from: usize },
    #[error("coupling {index}: magnitude {value} exceeds declared bound {bound}")]
    BoundExceeded {
        index: usize,
        value: f64,
        bound: f64,
    },
    #[error("coupling {index}: {context}")]
    BadCoupling { index: usize, context: String },
    #[error("state vector has length {got}, network expects {expected}")]
    StateLength { got: usize, expected: usize },
}

/// Failures while deriving per-subsystem gains.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GainError {
    #[error("subsystem {subsystem}: decay assumption violated: {context}")]
    AssumptionViolation { subsystem: usize, context: String },
    #[error("subsystem {subsystem}: supplied storage matrix is not usable: {context}")]
    BadStorage { subsystem: usize, context: String },
    #[error(
        "coupling ({to} <- {from}) is state-dependent; only the bounded form has an exact gain"
    )]
    StateDependentGain { to: usize, from: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Failures of the certification stage.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum CertifyError {
    #[error("no diagonal scaling certifies this structure matrix (LP infeasible)")]
    NoScalingFound,
    #[error("scaling verification failed: largest eigenvalue {max_eig} is not negative")]
    VerificationFailed { max_eig: f64 },
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error("invalid certification input: {context}")]
    BadInput { context: String },
    #[error(transparent)]
    Gain(#[from] GainError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Failures during numerical integration.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimError {
    #[error("state diverged: non-finite value at t = {last_finite_t}")]
    Divergence { last_finite_t: f64 },
    #[error("bad integration settings: {context}")]
    BadConfig { context: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}
