use thiserror::Error;

use crate::dsl::DslError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value at iterate {step}")]
    NonFinite { step: usize },

    #[error("map has no inverse")]
    MissingInverse,

    #[error("vector ({0}, {1}) does not have coprime entries")]
    NotCoprime(i64, i64),

    #[error("matrix determinant is {0}, expected 1")]
    NotUnimodular(i64),

    #[error(transparent)]
    Dsl(#[from] DslError),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures caused by the numerics rather than the request.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
