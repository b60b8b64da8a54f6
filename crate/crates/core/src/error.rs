use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = WrapError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum WrapError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("row {row}, column {column}: non-finite feature value {value}")]
    NonFinite { row: usize, column: usize, value: f32 },

    #[error("row {row}: label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { row: usize, label: u32, n_classes: u32 },

    #[error("duplicate row id {id} at row {row}")]
    DuplicateRowId { id: u64, row: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty dataset not writable")]
    EmptyDataset,

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("class {class} has {rows} rows, fewer than the {splits} requested splits")]
    ClassTooSmall { class: u32, rows: usize, splits: usize },

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("{what} = {value} exceeds the {available} training rows")]
    TooFewRows {
        what: &'static str,
        value: usize,
        available: usize,
    },

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("training set contains a single class")]
    SingleClass,

    #[error("policy {policy} unavailable for model class {model}")]
    PolicyUnavailable {
        policy: &'static str,
        model: &'static str,
    },

    #[error("cannot show {m} examples: only {n_used} were used for inference")]
    ExplanationTooLarge { m: usize, n_used: usize },

    #[error("{model} model has no support set")]
    NoSupport { model: &'static str },

    #[error("model file does not match dataset: {0}")]
    ModelMismatch(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl WrapError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        WrapError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for bad input or configuration, 1 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            WrapError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 2,
            WrapError::Io { .. } | WrapError::Json(_) => 1,
            _ => 2,
        }
    }
}
