use thiserror::Error;

/// Errors raised by distribution construction, bound calculators and verifiers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The input is valid but degenerate (e.g. zero variance), so the quantity is undefined.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The operation has no implementation for this kind of law.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Adaptive quadrature stopped before reaching the requested tolerance.
    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    /// A truncated pmf could not reach the requested tail tolerance inside the index cap.
    #[error("truncation tolerance {tol:.3e} not reached by index {max_index} (tail {tail:.3e})")]
    Truncation { tol: f64, max_index: usize, tail: f64 },

    /// A normalization audit failed.
    #[error("normalization audit failed: total mass {total}")]
    Normalization { total: f64 },

    /// Exact enumeration would be too large; use the sampler instead.
    #[error("too large for exact enumeration: {0}")]
    TooLarge(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Short machine-readable tag, used in CLI error payloads.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Degenerate(_) => "degenerate",
            Error::Unsupported(_) => "unsupported",
            Error::Quadrature { .. } => "quadrature",
            Error::Truncation { .. } => "truncation",
            Error::Normalization { .. } => "normalization",
            Error::TooLarge(_) => "too_large",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
