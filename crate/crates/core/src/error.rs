use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A JSONL line that does not decode into its record type.
    #[error("{file}:{line}: {message}")]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    /// A record refers to an id that is not present in the corpus.
    #[error("unresolved {kind} `{id}` referenced by {referrer}")]
    Unresolved {
        kind: &'static str,
        id: String,
        referrer: String,
    },

    /// A value violates a documented invariant.
    #[error("invalid {what}: {message}")]
    Invalid { what: String, message: String },

    /// A vector or model does not line up with the expected feature schema.
    #[error("schema mismatch: {0}")]
    Schema(String),

    /// Input that is required to be non-empty was empty.
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(what: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            what: what.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from bad user input rather than an internal fault.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
