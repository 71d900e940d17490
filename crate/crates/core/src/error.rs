use thiserror::Error;

use crate::state::Kind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("expected a {expected:?} state, got {got:?}")]
    Kind { expected: Kind, got: Kind },

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("unknown catalog entry: {0}")]
    UnknownId(String),

    #[error("finite-difference stencil left the domain at coordinate {coord}")]
    Stencil { coord: usize },

    #[error("base tensor is singular at the evaluation point")]
    Singular,

    #[error("tensor is not invariant under the involution (residual {residual:.3e})")]
    InvarianceViolation { residual: f64 },

    #[error("spectrum is nearly degenerate (gap {gap:.3e})")]
    Degenerate { gap: f64 },

    #[error("spectral parameter {lambda} is within {distance:.3e} of an eigenvalue")]
    NearSpectrum { lambda: f64, distance: f64 },

    #[error("Hankel determinant B_{index} = {value:.3e} is too small for the determinant formulas")]
    NearSingularHankel { index: usize, value: f64 },

    #[error("integration left the positive domain at t = {t}")]
    DomainExit { t: f64 },

    #[error("adaptive step underflow at t = {t} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, LatticeError>;
