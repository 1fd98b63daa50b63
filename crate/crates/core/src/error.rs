use std::fmt;

use thiserror::Error;

/// A rejected row of a knowledge-base file, with its 1-based line number
/// (the header is line 1).
#[derive(Debug, Clone, PartialEq)]
pub struct RowRejection {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for RowRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain `{name}`: {reason}")]
    InvalidDomain { name: String, reason: String },

    #[error("duplicate hyperparameter `{0}`")]
    DuplicateHyperparameter(String),

    #[error("configuration space `{0}` has no hyperparameters")]
    EmptySpace(String),

    #[error("unknown configuration space `{0}`")]
    UnknownSpace(String),

    #[error("unknown hyperparameter `{name}` in space `{algorithm}`")]
    UnknownHyperparameter { algorithm: String, name: String },

    #[error("value {value} is outside the domain of `{name}`")]
    OutOfDomain { name: String, value: String },

    #[error("configuration has {got} values, space `{algorithm}` expects {expected}")]
    DimensionMismatch {
        algorithm: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid hyperparameter subset: {0}")]
    InvalidSubset(String),

    #[error("no records")]
    NoRecords,

    #[error("{} row(s) rejected; first: {}", .0.len(), .0[0])]
    RejectedRows(Vec<RowRejection>),

    #[error("need at least {needed} records to fit a surrogate, got {got}")]
    TooFewRecords { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("algorithm `{0}` has no performance tables")]
    AlgorithmAbsent(String),

    #[error("no dataset is shared by at least two algorithms")]
    NoCommonDataset,

    #[error("dataset `{dataset}`: {source}")]
    Dataset {
        dataset: String,
        #[source]
        source: Box<Error>,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
