use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: u64,
        column: String,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown configuration keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate labels: training data contains a single class")]
    DegenerateLabels,

    #[error("non-finite feature value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("empty training data")]
    EmptyData,

    #[error("empty training window for month {0}")]
    EmptyTrainingWindow(String),

    #[error("AUC undefined: scores need at least one positive and one negative label")]
    AucUndefined,

    #[error("length mismatch: {0} scores vs {1} labels")]
    LengthMismatch(usize, usize),

    #[error("cannot build {k} stratified folds: a class has only {available} members")]
    ClassTooSmall { k: usize, available: usize },

    #[error("empty hyperparameter grid")]
    EmptyGrid,

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("weights undefined for forests")]
    WeightsUndefinedForForest,

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Short category name used by the command line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Validation(_) | Error::NonFinite { .. } => "validation",
            Error::Io { .. } => "io",
            Error::Json { .. } | Error::Config(_) | Error::UnknownKeys(_) => "config",
            Error::DimensionMismatch { .. } | Error::LengthMismatch(..) => "dimension",
            Error::DegenerateLabels
            | Error::EmptyData
            | Error::EmptyTrainingWindow(_)
            | Error::ClassTooSmall { .. }
            | Error::EmptyGrid
            | Error::InsufficientHistory(_) => "training",
            Error::AucUndefined => "evaluation",
            Error::WeightsUndefinedForForest => "model",
            Error::Context { source, .. } => source.category(),
        }
    }
}
