use thiserror::Error;

use crate::assumptions::Assumption;

/// Errors produced by the geometry, assembly, solver and driver layers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("assumption {assumption} violated at {location}")]
    AssumptionViolated {
        assumption: Assumption,
        location: String,
    },

    #[error("non-finite input: {0}")]
    NonFiniteInput(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular matrix: pivot {pivot:e} at row {row} (threshold {threshold:e})")]
    SingularMatrix {
        row: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("singular constraint Jacobian")]
    SingularJacobian,

    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),

    #[error("infeasible shape request: {0}")]
    Infeasible(String),

    #[error("run degenerated at step {step}: {reason}")]
    Degenerated { step: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
