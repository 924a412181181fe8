use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unknown category {value:?} in column {column:?} (row {row})")]
    UnknownCategory { column: String, value: String, row: usize },

    #[error("non-numeric token {value:?} in column {column:?} (row {row})")]
    NotNumeric { column: String, value: String, row: usize },

    #[error("all-missing row {row}")]
    AllMissingRow { row: usize },

    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),

    #[error("column {column:?}: {reason}")]
    InvalidColumn { column: String, reason: String },

    #[error("empty column {0:?}")]
    EmptyColumn(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("distance undefined for recipient {0} against every donor")]
    NoDefinedDonor(usize),

    #[error("simulation failed: {0}")]
    Simulation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
