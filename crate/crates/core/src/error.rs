use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no solvent benchmark: maximum equity {0} is not positive")]
    NoSolventBenchmark(f64),

    #[error("no lending capacity")]
    NoLendingCapacity,

    #[error("certain default: survival probability is zero")]
    CertainDefault,

    #[error("episode finished")]
    EpisodeFinished,

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("degenerate regressor: {0}")]
    DegenerateRegressor(&'static str),

    #[error("window {window} exceeds series length {len}")]
    WindowTooLong { window: usize, len: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("training diverged in instance {instance} at episode {episode}: {reason}")]
    Divergence {
        instance: usize,
        episode: usize,
        reason: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("replica {replica}: {source}")]
    Replica {
        replica: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) => 2,
            Error::Divergence { .. } => 3,
            Error::Io { .. } | Error::Format { .. } => 4,
            Error::Replica { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}
