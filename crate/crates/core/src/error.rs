use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("{path}: {message}")]
    Header { path: String, message: String },

    #[error("{path}: cannot parse {value:?} at row {row}, column `{column}`")]
    Cell {
        path: String,
        row: usize,
        column: String,
        value: String,
    },

    #[error("{path}: missing value at row {row}, column `{column}`")]
    Missing {
        path: String,
        row: usize,
        column: String,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("ids not present in every source: {}", .0.join(", "))]
    OrphanIds(Vec<String>),

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("instance does not match the training schema: {0}")]
    SchemaMismatch(String),

    #[error("attribute `{0}` is not numeric")]
    NotNumeric(String),

    #[error("mark {0} lies outside [0, 10]")]
    MarkOutOfRange(f64),

    #[error("at least 2 bins are required, got {0}")]
    TooFewBins(usize),

    #[error("attribute index {index} out of range for {len} attributes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("empty feature subset")]
    EmptySubset,

    #[error("cannot train on an empty dataset")]
    EmptyDataset,

    #[error("dataset has no class labels")]
    Unlabeled,

    #[error("exhaustive search supports at most {max} attributes, got {got}")]
    TooManyAttributes { got: usize, max: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("AUC is undefined when only one class is present")]
    SingleClass,

    #[error("invalid fold count k={k} for n={n}")]
    InvalidFolds { k: usize, n: usize },

    #[error("malformed rule text at line {line}: {message}")]
    RuleText { line: usize, message: String },

    #[error("infeasible generator parameters: {0}")]
    Generator(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("cell {cell}: {source}")]
    InCell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the experiment configuration rather than data.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Config(_) | Error::Generator(_) | Error::TooFewBins(_) | Error::InvalidFolds { .. } => true,
            Error::InCell { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}
