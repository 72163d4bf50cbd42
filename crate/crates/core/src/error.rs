use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("point is outside the simplex: {0}")]
    OutsideSimplex(String),

    #[error("point lies on the boundary of the simplex")]
    Boundary,

    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {d} is not supported here (maximum {max})")]
    Dimension { d: usize, max: usize },

    #[error("no evaluation point falls inside the open simplex")]
    EmptyRegion,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("insufficient samples: got {got}, need at least {min}")]
    InsufficientSamples { got: usize, min: usize },

    #[error("argument {0} is outside the domain of the function")]
    Domain(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
