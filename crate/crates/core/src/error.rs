use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    /// Malformed instance file. `line` and `column` are 1-based.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A field violates a model invariant (e.g. non-positive demand rate).
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("steady-state violated at facility {facility}: capacity {capacity} <= arrival rate {arrival_rate}")]
    SteadyState {
        facility: usize,
        capacity: f64,
        arrival_rate: f64,
    },

    #[error("infeasible solution: {0}")]
    Infeasible(String),

    #[error("root finding did not converge: {0}")]
    NoConvergence(String),

    #[error("instance too large for exhaustive enumeration: {facilities} facilities x {customers} customers (limit {max_facilities} x {max_customers})")]
    TooLarge {
        facilities: usize,
        customers: usize,
        max_facilities: usize,
        max_customers: usize,
    },

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}
