use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the formula.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("mode index {index} out of range for a chain of {len} sites")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// Custom profile samples or other user-supplied data failed validation.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error(
        "time step {dt:e} s exceeds the stability bound {bound:e} s (2*pi / (100 * omega_max))"
    )]
    TimeStep { dt: f64, bound: f64 },

    #[error("root finder failed: {0}")]
    RootFinder(String),

    #[error("invalid config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
