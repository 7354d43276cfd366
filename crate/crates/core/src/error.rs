use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "K = {k} exceeds the exhaustive-scheme limit of {k_max}: B_{k} = {bell} hypotheses per feature"
    )]
    TooManyClasses { k: usize, k_max: usize, bell: String },

    #[error("invalid partition column {column}: {reason}")]
    InvalidPartition { column: usize, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{path}: row {row}, column {column}: {reason}")]
    Parse {
        path: String,
        row: usize,
        column: String,
        reason: String,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}
