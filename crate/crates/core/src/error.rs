use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("grammar error: {0}")]
    Grammar(String),

    #[error("vocabulary error: {0}")]
    Vocab(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("numeric fault{}: {msg}", step.map(|t| format!(" at step {t}")).unwrap_or_default())]
    Numeric { step: Option<usize>, msg: String },

    #[error("probe error: {0}")]
    Probe(String),

    #[error("digest mismatch: {0}")]
    DigestMismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn numeric(step: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Numeric {
            step,
            msg: msg.into(),
        }
    }

    /// Process exit code for the CLI: 1 validation, 2 numeric, 3 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric { .. } => 2,
            Error::Io(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
