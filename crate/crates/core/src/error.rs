use thiserror::Error;

/// Errors raised by the coverage library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// A configuration is valid on its own but not supported by the requested method.
    #[error("unsupported configuration for {op}: {msg}")]
    Unsupported { op: &'static str, msg: String },

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error(
        "quadrature did not converge in {op}: estimate {estimate:e}, error {error:e} \
         on [{lower}, {upper}] after {intervals} subintervals"
    )]
    Quadrature {
        op: &'static str,
        estimate: f64,
        error: f64,
        lower: f64,
        upper: f64,
        intervals: usize,
    },

    /// A constellation snapshot could not be read.
    #[error("snapshot {path}: {msg}")]
    Snapshot { path: String, msg: String },
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }

    pub(crate) fn unsupported(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Unsupported { op, msg: msg.into() }
    }

    /// Whether the error came from a numerical routine rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Quadrature { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
