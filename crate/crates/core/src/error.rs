use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite probability in sample {id:?}")]
    NonFiniteProbability { id: String },

    #[error("negative probability in sample {id:?}")]
    NegativeProbability { id: String },

    #[error("probabilities of sample {id:?} sum to {sum}, outside tolerance")]
    SumOutOfTolerance { id: String, sum: f64 },

    #[error("label {label} of sample {id:?} out of range for {num_classes} classes")]
    LabelOutOfRange {
        id: String,
        label: i64,
        num_classes: usize,
    },

    #[error("sample {id:?} has {got} probabilities, expected {expected}")]
    ClassCountMismatch {
        id: String,
        expected: usize,
        got: usize,
    },

    #[error("at least 2 classes are required, got {0}")]
    TooFewClasses(usize),

    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("unknown rule {0:?}")]
    UnknownRule(String),

    #[error("unknown metric {0:?}")]
    UnknownMetric(String),

    #[error("empty fraction list")]
    EmptyFractionList,

    #[error("retention fraction {0} outside (0, 1]")]
    FractionOutOfRange(f64),

    #[error("invalid fraction grid: {0}")]
    InvalidFractionGrid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid cost matrix: {0}")]
    InvalidCostMatrix(String),

    #[error("number of bins must be positive")]
    ZeroBins,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("curves do not share a grid: {0}")]
    GridMismatch(String),

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("line {line}: expected {expected} fields, got {got}")]
    RowArityMismatch {
        line: u64,
        expected: usize,
        got: usize,
    },

    #[error("line {line}, column {column}: non-numeric field {value:?}")]
    NonNumericField {
        line: u64,
        column: usize,
        value: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attach a sample id to a probability-vector validation error.
    pub(crate) fn with_id(self, sample: &str) -> Self {
        let id = sample.to_string();
        match self {
            Error::NonFiniteProbability { .. } => Error::NonFiniteProbability { id },
            Error::NegativeProbability { .. } => Error::NegativeProbability { id },
            Error::SumOutOfTolerance { sum, .. } => Error::SumOutOfTolerance { id, sum },
            Error::ClassCountMismatch { expected, got, .. } => {
                Error::ClassCountMismatch { id, expected, got }
            }
            other => other,
        }
    }
}
