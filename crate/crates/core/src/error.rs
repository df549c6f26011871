use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The catalog does not carry the requested weak derivative. Callers
    /// that still need a value must fall back to finite differences of the
    /// pairing itself.
    #[error("weak derivative of order {order:?} is not in the catalog")]
    DerivativeUnavailable { order: Vec<u32> },

    #[error("nonlinearity carries point masses; they have measure zero under sampling")]
    AtomsNotSampleable,

    #[error("quadrature node budget exceeded: {nodes} nodes > cap {cap}")]
    NodeBudgetExceeded { nodes: u128, cap: u128 },

    #[error("moment order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: u32, max: u32 },

    #[error("finite-difference stencil leaves the positive definite cone")]
    StencilLeavesPdCone,

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
