use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke a documented precondition (shape, range, ordering).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("cannot sample from empty buffer")]
    EmptyBuffer,

    #[error("no failed goals to cluster")]
    NoFailedGoals,

    #[error("cluster model not yet fit")]
    ModelNotFit,

    #[error("index/model version mismatch (index v{index}, model v{model})")]
    VersionMismatch { index: u64, model: u64 },

    #[error("training diverged")]
    Diverged,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{algo} seed {seed} failed: {source}")]
    SeedFailed {
        algo: String,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_dim(what: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(Error::contract(format!(
            "{what}: expected length {want}, got {got}"
        )))
    }
}
