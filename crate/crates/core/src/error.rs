use thiserror::Error;

use crate::lattice::Rect;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("({x}, {y}) is not a lattice site (x + y must be even)")]
    NotASite { x: i64, y: i64 },

    #[error("empty rectangle [{x_min},{x_max}]x[{y_min},{y_max}]")]
    EmptyRect {
        x_min: i64,
        x_max: i64,
        y_min: i64,
        y_max: i64,
    },

    #[error("row {y} is outside {rect}")]
    RowOutsideRect { y: i64, rect: Rect },

    #[error("source set is empty after intersecting with the lattice and {rect}")]
    DegenerateSource { rect: Rect },

    #[error("{what}: {needed} exceeds capacity {limit}")]
    Capacity {
        what: &'static str,
        needed: usize,
        limit: usize,
    },

    #[error("event '{event}' declared increasing but fails after opening edge {edge} (configuration {config:#x})")]
    NotMonotone {
        event: String,
        config: u64,
        edge: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("monotone bisection over p requires Coupled mode")]
    CoupledModeRequired,

    #[error("too few usable rows for a power-law fit: {usable} (need at least 3)")]
    TooFewRows { usable: usize },

    #[error("condition not met after {attempts} attempts (acceptance rate {rate})")]
    AttemptsExhausted { attempts: u64, rate: f64 },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Error {
        Error::InvalidArgument(msg.into())
    }
}
