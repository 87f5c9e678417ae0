use thiserror::Error;

/// Errors raised by the simulation layers.
#[derive(Debug, Error)]
pub enum ClmError {
    #[error("capacity exceeded: {what} needs {requested} sites, limit is {limit}")]
    Capacity {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("output: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, ClmError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(ClmError::InvalidInput(msg.into()))
}
