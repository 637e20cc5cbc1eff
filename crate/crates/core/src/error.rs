use std::path::PathBuf;

use crate::domain::Violation;

pub type Result<T, E = WcbError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum WcbError {
    /// An argument fell outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("validation failed with {} violation(s): {}", .0.len(), summarize(.0))]
    Validation(Vec<Violation>),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Money or population bookkeeping broke inside a replication.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("replication {index} aborted: {source}")]
    Replication {
        index: u64,
        #[source]
        source: Box<WcbError>,
    },
}

impl WcbError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        WcbError::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        WcbError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem rather than by the data.
    pub fn is_io(&self) -> bool {
        match self {
            WcbError::Io { .. } => true,
            WcbError::Replication { source, .. } => source.is_io(),
            _ => false,
        }
    }
}

fn summarize(violations: &[Violation]) -> String {
    let mut parts: Vec<String> = violations.iter().take(3).map(|v| v.to_string()).collect();
    if violations.len() > 3 {
        parts.push(format!("... and {} more", violations.len() - 3));
    }
    parts.join("; ")
}
