use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("malformed CSV at byte offset {offset}: {reason}")]
    MalformedCsv { offset: u64, reason: String },

    #[error("row {row}: {reason}")]
    BadRow { row: usize, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch}: {what}")]
    Diverged { epoch: usize, what: String },

    #[error("matrix of {rows}x{cols} cells exceeds the cell budget of {budget}")]
    CellBudget { rows: usize, cols: usize, budget: u64 },

    #[error("leakage: held-out ids of fold {fold} appear in {stage} ({count} ids)")]
    Leakage { fold: usize, stage: String, count: usize },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("bad model file: {0}")]
    ModelFormat(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse grouping of errors, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
    Io,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub fn in_fold(self, fold: usize) -> Self {
        Error::Fold {
            fold,
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => ErrorClass::Config,
            Error::FileNotFound(_) | Error::Io { .. } => ErrorClass::Io,
            Error::NonFinite(_) | Error::Diverged { .. } => ErrorClass::Numeric,
            Error::Fold { source, .. } => source.class(),
            Error::MalformedCsv { .. }
            | Error::BadRow { .. }
            | Error::Empty(_)
            | Error::DimensionMismatch { .. }
            | Error::CellBudget { .. }
            | Error::Leakage { .. }
            | Error::ModelFormat(_) => ErrorClass::Data,
        }
    }
}
