use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("grid of {grid} points is too coarse for {terms} basis terms")]
    GridTooCoarse { grid: usize, terms: usize },

    #[error("covariance factorization failed after raising jitter to {jitter:e}")]
    Factorization { jitter: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(
        "evidence underflows to zero (log Z = {log_z}); work with the log-sum-exp value instead"
    )]
    EvidenceUnderflow { log_z: f64 },

    #[error("importance weights degenerate: ESS {ess_a:.1} / {ess_b:.1} below {min}")]
    DegenerateWeights { ess_a: f64, ess_b: f64, min: f64 },

    #[error("chain never accepted a proposal during {burn_in} burn-in steps")]
    NoAcceptance { burn_in: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
