use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmpsError {
    /// A dense object would exceed the configured size guard.
    #[error("capacity exceeded: {what} needs {requested} entries, limit is {limit}")]
    Capacity {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    /// Matrix shapes, local dimensions or table sizes do not line up.
    #[error("structural error: {0}")]
    Structure(String),

    /// An argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The input does not satisfy the operation's precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The input carries no probability mass where some is required.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Candidate representations disagree on the distribution they encode.
    #[error("inconsistent representations: {0}")]
    Inconsistent(String),

    /// An iterative or direct solver failed to reach its residual target.
    #[error("numerical failure: {message} (residual {residual:e})")]
    Numerical { message: String, residual: f64 },
}

pub type Result<T> = std::result::Result<T, SmpsError>;
