use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    /// A line of an input stream violated its format contract.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An id referred to something that does not exist.
    #[error("unknown {kind} '{id}'")]
    UnknownId { kind: &'static str, id: String },

    /// A parameter or input violated a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration value would make a stage meaningless.
    #[error("configuration error: {0}")]
    Config(String),

    /// Concept enumeration exceeded the configured ceiling.
    #[error("concept count exceeded the ceiling of {ceiling}")]
    ConceptCeiling { ceiling: usize },

    /// A remote service kept failing after bounded retries.
    #[error("service error after {attempts} attempt(s): {message}")]
    Service { attempts: u32, message: String },

    /// A parsed value failed a semantic check.
    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }

    pub fn unknown(kind: &'static str, id: impl Into<String>) -> Self {
        Error::UnknownId { kind, id: id.into() }
    }
}
