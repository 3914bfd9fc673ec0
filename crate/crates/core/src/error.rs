use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("table has no data rows")]
    EmptyTable,

    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),

    #[error("target column `{0}` is not numerical")]
    NonNumericTarget(String),

    #[error("no feature columns remain besides the target")]
    NoFeatures,

    #[error("attribute `{attribute}`: {message}")]
    KindMismatch { attribute: String, message: String },

    #[error("observation lacks attribute `{0}`")]
    MissingAttribute(String),

    #[error("attribute `{attribute}` has non-finite value {value}")]
    NonFinite { attribute: String, value: f64 },

    #[error("invalid interval: {0}")]
    InvalidInterval(String),

    #[error("pattern already constrains attribute `{0}`")]
    DuplicateAttribute(String),

    #[error("pattern `{0}` matches no rows")]
    EmptyRegion(String),

    #[error("target takes a single value on these rows")]
    DegenerateTarget,

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("row {row}: {source}")]
    AtRow {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// True for failures caused by user-supplied input rather than by a bug.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Invariant(_) => false,
            Error::AtRow { source, .. } => source.is_input_error(),
            _ => true,
        }
    }
}
