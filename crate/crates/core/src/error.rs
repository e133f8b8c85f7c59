use std::path::PathBuf;

use crate::corpus::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}, row {row}: {message}")]
    Parse {
        context: String,
        row: usize,
        message: String,
    },

    #[error("malformed JSON in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{} annotation violation(s): {}", .0.len(), join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("invalid participant name {0:?}")]
    InvalidName(String),

    #[error("coverage mismatch: {0}")]
    Coverage(String),

    #[error("partitions cover different element sets: {0}")]
    ElementMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("rank-deficient or separated design at column {column}: {reason}")]
    Design { column: String, reason: String },

    #[error("Newton iterations did not converge after {iterations} steps (max |gradient| = {gradient_norm:e})")]
    NoConvergence {
        iterations: usize,
        gradient_norm: f64,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures reading or locating files, as opposed to bad content.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
