use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("parse error at row {row}, column `{column}`: cannot read {value:?} as a number")]
    Parse { row: usize, column: String, value: String },
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("imbalance ratio undefined: no majority-class rows")]
    UndefinedIr,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("insufficient {class} rows: requested {requested}, available {available}")]
    InsufficientRows {
        class: &'static str,
        requested: usize,
        available: usize,
    },
    #[error("need at least {required} minority rows, found {found}")]
    InsufficientMinority { required: usize, found: usize },
    #[error("no borderline (DANGER) minority rows found")]
    NoBorderline,
    #[error("all minority rows are interior (no majority neighbours); ADASYN density undefined")]
    DegenerateDensity,
    #[error("editing removed every row of class {0}")]
    DegenerateEdit(u8),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("stale forward cache: network parameters changed since the forward pass")]
    StaleCache,
    #[error("training diverged at epoch {epoch}: non-finite loss")]
    TrainingDiverged { epoch: usize },
    #[error("mixture fit failed: {0}")]
    MixtureFit(String),
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("stratification error: {0}")]
    Stratification(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("affinity bisection failed for row {row}")]
    Bisection { row: usize },
    #[error("model file error: {0}")]
    ModelFile(String),
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
