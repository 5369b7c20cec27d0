use thiserror::Error;

/// Library-wide error type. The CLI maps `Config` to exit code 2 and every
/// other variant to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration, scenario file, or parameter combination.
    #[error("configuration error: {0}")]
    Config(String),

    /// A computation left its numerical domain (non-finite values, exhausted
    /// precision, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The requested operation is not defined for these inputs (e.g. Fano's
    /// bound with two types, exact MAP on a mixture family).
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
