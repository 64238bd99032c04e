//! Crate error type.

/// Errors produced by model validation, mechanisms, detection, and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A model specification violates a structural invariant.
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two inputs that must share a shape do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A CUSUM window or scan range is ill-formed.
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    /// A configuration file could not be interpreted.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    /// An experiment cell was aborted.
    #[error("experiment cell ({cell}) aborted: {message}")]
    Cell { cell: String, message: String },

    /// Filesystem failure, annotated with the path involved.
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
