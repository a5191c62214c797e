use thiserror::Error;

/// Errors surfaced by the simulation and combinatorics kernels.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the mathematical domain was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// A simulation configuration cannot produce meaningful output.
    #[error("configuration error: {0}")]
    Config(String),

    /// Config file parse failure with a 1-based line number.
    #[error("config parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Embedding extraction exhausted its search space.
    #[error("extraction error: {0}")]
    Extraction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
