use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain an operation accepts.
    #[error("invalid input `{what}`: {reason}")]
    InvalidInput { what: &'static str, reason: String },

    /// A run or experiment configuration failed validation.
    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// The requested closed form does not exist for this model family.
    #[error("unsupported family `{family}` for {operation}")]
    UnsupportedFamily {
        family: &'static str,
        operation: &'static str,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An estimator failed inside a chain; `iteration` counts refits (0 = initial fit).
    #[error("chain {chain} failed at iteration {iteration}: {source}")]
    Chain {
        chain: usize,
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(what: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors the CLI reports as configuration problems (exit code 2).
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config { .. } | Error::InvalidInput { .. } | Error::Json(_) => true,
            Error::Chain { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
