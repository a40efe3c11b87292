use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set violates a type invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An iterative routine ran out of iterations or could not bracket a root.
    #[error("numerical error: {message} (estimate {estimate:e}, error bound {error_bound:e})")]
    Numerical {
        message: String,
        estimate: f64,
        error_bound: f64,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
