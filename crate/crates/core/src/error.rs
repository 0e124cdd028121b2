use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}: line {line}: invalid UTF-8", path.display())]
    Decode { path: PathBuf, line: usize },

    #[error("source and target are not aligned: {source_lines} vs {target_lines} lines")]
    Alignment {
        source_lines: usize,
        target_lines: usize,
    },

    #[error("cannot split {size} pairs into dev={dev} and test={test}")]
    SplitSize { size: usize, dev: usize, test: usize },

    /// Malformed file content. `line` is 1-based.
    #[error("{what}: line {line}: {message}")]
    Parse {
        what: &'static str,
        line: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("rule `{rule}` cannot attach to `{stem}`: {reason}")]
    Generation {
        rule: String,
        stem: String,
        reason: &'static str,
    },

    /// An internal consistency check failed. Reported separately from data
    /// errors so callers can distinguish bugs from bad input.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(what: &'static str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            what,
            line,
            message: message.into(),
        }
    }

    /// True when this error (or the stage error it wraps) is an invariant violation.
    pub fn is_invariant(&self) -> bool {
        match self {
            Error::Invariant(_) => true,
            Error::Stage { source, .. } => source.is_invariant(),
            _ => false,
        }
    }
}
