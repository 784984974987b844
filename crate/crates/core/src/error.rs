use std::fmt;

use thiserror::Error;

use crate::model::OpinionState;

/// One failed check in a configuration, addressed by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// A value outside the domain of the function it was passed to
    /// (negative distance, NaN sample, empty vector, ...).
    #[error("input domain error: {0}")]
    InputDomain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid configuration:\n{}", format_violations(.0))]
    Violations(Vec<Violation>),

    /// A step produced a non-finite opinion. `last_state` is the last state
    /// in which every opinion was finite.
    #[error("divergence at step {step}: agent {agent} became non-finite")]
    Divergence {
        step: u64,
        agent: usize,
        last_state: Box<OpinionState>,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 2 config, 3 divergence, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InputDomain(_) | Error::Config(_) | Error::Violations(_) => 2,
            Error::Divergence { .. } => 3,
            Error::Format(_) | Error::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
