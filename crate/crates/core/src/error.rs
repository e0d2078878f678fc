//! Error types shared across the workbench.

/// Workbench-wide error type.
///
/// `InvalidInput` covers every precondition violation (dimension mismatches,
/// out-of-range parameters, malformed files). Solver-specific failures carry
/// their own variants so callers can map them to distinct exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("linear program is infeasible: {0}")]
    Infeasible(String),

    #[error("resource budget exhausted: {0}")]
    ResourceExhausted(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// True for errors that indicate a caller mistake rather than a solver
    /// or environment failure.
    pub fn is_invalid_input(&self) -> bool {
        matches!(self, Error::InvalidInput(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
