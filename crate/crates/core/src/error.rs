use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A generator or design was configured with parameters outside its domain.
    #[error("invalid specification: {0}")]
    Specification(String),

    #[error("sample size {requested} exceeds the {available} units available")]
    Size { requested: usize, available: usize },

    #[error("{what} needs at least {required} sampled units, got {got}")]
    DegreesOfFreedom {
        what: &'static str,
        required: usize,
        got: usize,
    },

    #[error("variance-to-mean ratio is undefined for a frame with zero total")]
    UndefinedVmr,

    #[error("degenerate population: {0}")]
    DegeneratePopulation(String),

    /// Inputs that disagree about the shape of the population they describe.
    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn spec(msg: impl Into<String>) -> Self {
        Error::Specification(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// True for errors caused by a population with no usable variation.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::DegeneratePopulation(_) | Error::UndefinedVmr)
    }
}
