use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("brain: {0}")]
    Brain(#[from] BrainError),

    /// A replay schedule that cannot be honoured by the population it drives.
    #[error("schedule inconsistency at step {step}: {reason}")]
    Inconsistency { step: u64, reason: String },

    /// Artifacts that do not belong together, e.g. a schedule recorded under
    /// a different configuration.
    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error("nothing to analyze: {0}")]
    NothingToAnalyze(String),

    #[error("malformed {what} in {path}: {reason}")]
    Format {
        what: &'static str,
        path: PathBuf,
        reason: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(what: &'static str, path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            what,
            path: path.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BrainError {
    #[error("architecture has no processing neurons")]
    NoProcessingNeurons,
    #[error("last processing group has {0} excitatory neurons, need at least {1} for outputs")]
    TooFewOutputs(usize, usize),
    #[error("expected {expected} inputs, got {got}")]
    InputLength { expected: usize, got: usize },
}
