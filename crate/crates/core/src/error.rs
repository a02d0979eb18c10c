use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied basis (for a projector or a span) is rank deficient.
    #[error("degenerate basis: {0}")]
    DegenerateBasis(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A modelling assumption (bounded parameter, nonzero projected
    /// parameter, subspace inside the arm span) does not hold.
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("insufficient data: need {needed} eligible records, found {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("undefined slope: {0}")]
    UndefinedSlope(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
