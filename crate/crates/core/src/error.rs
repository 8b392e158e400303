use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is missing, unknown or out of range.
    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },

    /// Operands of a numeric operation disagree in shape.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("reservoir construction failed: {0}")]
    Construction(String),

    #[error("{path}: row {row}, column {column}: {message}")]
    Ingest {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("training diverged at episode {episode}: {message}")]
    Training { episode: usize, message: String },

    #[error("measure undefined: {0}")]
    UndefinedMeasure(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },
}

impl Error {
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

    /// Short machine-readable tag, used by the CLI's error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config { .. } => "config",
            Error::Dimension { .. } => "dimension",
            Error::Construction(_) => "construction",
            Error::Ingest { .. } => "ingest",
            Error::Training { .. } => "training",
            Error::UndefinedMeasure(_) => "undefined_measure",
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
        }
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            actual,
        })
    }
}
