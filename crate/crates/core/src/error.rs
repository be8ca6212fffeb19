use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("kernel under-resolved: decay rate {rate} with step {step} (rate * step must be <= 1)")]
    UnderResolvedKernel { rate: f64, step: f64 },

    #[error("time grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error(
        "resolution guard violated{}: lambda = {lambda}, step = {step} (lambda * step must be <= 0.5)",
        mode.map(|m| format!(" at mode {m}")).unwrap_or_default()
    )]
    UnderResolvedMode {
        mode: Option<usize>,
        lambda: f64,
        step: f64,
    },

    #[error("singular system: {0}")]
    Singular(String),
}

impl Error {
    /// Attach a mode index to a resolution-guard failure.
    pub fn at_mode(self, index: usize) -> Self {
        match self {
            Error::UnderResolvedMode { lambda, step, .. } => Error::UnderResolvedMode {
                mode: Some(index),
                lambda,
                step,
            },
            other => other,
        }
    }

    /// True for failures of a numerical guard (as opposed to malformed input).
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::UnderResolvedKernel { .. } | Error::UnderResolvedMode { .. } | Error::Singular(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
