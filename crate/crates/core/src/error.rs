use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed arguments: dimension mismatch, out-of-range index, bad shape.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Inputs that are well-formed but violate a physical precondition.
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// A fit stopped without meeting its convergence criterion.
    #[error("fit did not converge after {iterations} iterations (last rate {last_rate:e}, residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        last_rate: f64,
        residual: f64,
    },
    /// A quantity left the domain where an operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
