//! Crate-wide error type and exit-code mapping.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate (firm_id, year) keys: {}", format_keys(.0))]
    DuplicateKey(Vec<(String, i32)>),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("CSV schema mismatch: missing columns {missing:?}, unknown columns {unknown:?}")]
    SchemaMismatch {
        missing: Vec<String>,
        unknown: Vec<String>,
    },

    #[error("row {row}, column `{column}`: cannot parse {value:?}")]
    ParseError {
        row: usize,
        column: String,
        value: String,
    },

    #[error("model formula: {0}")]
    Formula(String),

    #[error("config line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("{n} observations cannot identify {k} columns")]
    InsufficientObservations { n: usize, k: usize },

    #[error("every design column was dropped as aliased")]
    AllColumnsAliased,

    #[error("variable `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("year {year}: winsorization group for `{variable}` has {n} < 2 observations")]
    GroupTooSmall {
        year: i32,
        variable: String,
        n: usize,
    },

    #[error("mediation ratio undefined: total effect is zero")]
    ZeroTotalEffect,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_keys(keys: &[(String, i32)]) -> String {
    keys.iter()
        .map(|(f, y)| format!("({f}, {y})"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    /// Process exit code for the CLI: 2 for data and schema problems,
    /// 3 for numerical failures. Usage errors (exit 1) never reach this
    /// type; they are caught at argument parsing.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DuplicateKey(_)
            | Error::UnknownVariable(_)
            | Error::SchemaMismatch { .. }
            | Error::ParseError { .. }
            | Error::Formula(_)
            | Error::ConfigParse { .. }
            | Error::InvalidParams(_)
            | Error::EmptyDataset
            | Error::Io(_) => 2,
            Error::InsufficientObservations { .. }
            | Error::AllColumnsAliased
            | Error::ZeroVariance(_)
            | Error::GroupTooSmall { .. }
            | Error::ZeroTotalEffect => 3,
        }
    }
}
