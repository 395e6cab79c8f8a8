use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("empty file: {0}")]
    EmptyFile(PathBuf),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("missing value in row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },

    #[error("non-numeric cell `{value}` in row {row}, column `{column}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("invalid event flag `{value}` in row {row} (expected 0 or 1)")]
    InvalidEventFlag { row: usize, value: String },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("empty kernel neighborhood: every kernel weight is zero")]
    EmptyKernelNeighborhood,

    #[error("weight vector has empty support")]
    EmptySupport,

    #[error("empty candidate set")]
    EmptyCandidateSet,

    #[error("no comparable pairs for the concordance index")]
    NoComparablePairs,

    #[error("model file: {0}")]
    Model(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the input data or files rather than by a
    /// bug or an impossible internal state.
    pub fn is_data_error(&self) -> bool {
        !matches!(
            self,
            Error::EmptySupport | Error::EmptyCandidateSet | Error::InvalidConfig(_)
        )
    }
}
