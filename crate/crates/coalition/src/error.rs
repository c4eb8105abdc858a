//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Matrix/vector dimensions do not line up.
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    /// A numeric input was NaN or infinite.
    #[error("non-finite value in {context}: {value}")]
    NonFinite { context: &'static str, value: f64 },

    /// A value violated a domain constraint (negative variance, bad range, ...).
    #[error("invalid value in {context}: {detail}")]
    InvalidValue { context: &'static str, detail: String },

    /// A configuration failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An allocation violates the per-species robot budget.
    #[error("infeasible allocation: {detail}")]
    Infeasible { detail: String },

    /// An operation that needs data received none.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
