use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("topology error: {0}")]
    Topology(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("data error at row {row}: {message}")]
    Data { row: usize, message: String },

    #[error("gap in hourly data at row {row}: missing month {month} day {day} hour {hour}")]
    Gap {
        row: usize,
        month: u32,
        day: u32,
        hour: u32,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("infeasible scenario: {0}")]
    Infeasible(String),

    #[error("enumeration limit exceeded: {states} placement states > limit {limit}")]
    LimitExceeded { states: f64, limit: f64 },

    #[error("report error: {0}")]
    Report(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("I/O error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
