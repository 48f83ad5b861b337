//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by grid construction, file I/O, transforms and pairings.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid axis: {0}")]
    InvalidAxis(String),

    #[error("p+ must be nonzero")]
    PPlusZero,

    #[error("p+ sign mismatch: expected sign {expected:+}, got p+ = {got}")]
    PPlusSignMismatch { expected: i8, got: f64 },

    #[error("frame mismatch: expected {expected}, got {got}")]
    FrameMismatch {
        expected: &'static str,
        got: &'static str,
    },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("interpolation query out of range on axis {axis}: coordinate {coord} not in [{lo}, {hi}]")]
    InterpOutOfRange {
        axis: usize,
        coord: f64,
        lo: f64,
        hi: f64,
    },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("file format error: {0}")]
    Format(String),

    #[error("derivative order {0} exceeds the certified closed-form limit 2")]
    DerivativeOrder(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
