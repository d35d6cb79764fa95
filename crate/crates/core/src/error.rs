use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{malformed} of {total} lines malformed (first offending lines: {first_lines:?})")]
    Schema {
        malformed: usize,
        total: usize,
        first_lines: Vec<usize>,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate labeling: {0}")]
    DegenerateLabeling(String),

    #[error("polarization score undefined: all densities are zero")]
    UndefinedScore,

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("input format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
