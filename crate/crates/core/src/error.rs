use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("label column `{0}` not found")]
    LabelColumnMissing(String),
    #[error("label column must have exactly 2 classes, found {0}")]
    ClassCount(usize),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("column `{0}` has no non-missing values")]
    ColumnAllMissing(String),
    #[error("class `{class}` has {count} records, need at least {required}")]
    ClassTooSmall {
        class: String,
        count: usize,
        required: usize,
    },
    #[error("invalid mask: {0}")]
    InvalidMask(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("feature scores sum to zero (M2 must be positive)")]
    ZeroTotalScore,
    #[error("evaluation failed at iteration {iteration}: {source}")]
    Evaluation {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("all folds failed: {0}")]
    AllFoldsFailed(String),
    #[error("all differences are zero")]
    AllDifferencesZero,
}

impl Error {
    /// Short machine-readable tag used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::FileNotFound(_) => "file-not-found",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::LabelColumnMissing(_) => "label-missing",
            Error::ClassCount(_) => "class-count",
            Error::EmptyDataset => "empty-dataset",
            Error::ColumnAllMissing(_) => "column-all-missing",
            Error::ClassTooSmall { .. } => "class-too-small",
            Error::InvalidMask(_) => "invalid-mask",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::SchemaMismatch(_) => "schema-mismatch",
            Error::ZeroTotalScore => "zero-total-score",
            Error::Evaluation { .. } => "evaluation",
            Error::AllFoldsFailed(_) => "all-folds-failed",
            Error::AllDifferencesZero => "all-differences-zero",
        }
    }
}
