use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates a precondition (dimension mismatch, bad range, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The input is structurally valid but numerically degenerate
    /// (zero precoder, near-singular Gram matrix, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A caller contract was violated (only checked in debug builds).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numerical routine failed beyond recoverable regularization.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Experiment configuration is inconsistent or incomplete.
    #[error("config error: {0}")]
    Config(String),

    /// An I/O operation failed; `path` gives the offending location.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
