//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by core operations, solvers, and problem generators.
#[derive(Error, Debug)]
pub enum Error {
    #[error("empty vector")]
    EmptyVector,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid interval: lo={lo} > hi={hi}")]
    BadInterval { lo: f64, hi: f64 },

    #[error("operator is numerically zero")]
    ZeroOperator,

    #[error("point lies outside the set (distance {dist:.3e} exceeds tolerance)")]
    OutsideSet { dist: f64 },

    #[error("unsupported: {0}")]
    Unsupported(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inner solver failed to converge within {iters} iterations")]
    NonConvergence {
        iters: u64,
        /// Last accepted inner state, for diagnosis.
        last: Box<crate::acg::AcgState>,
    },

    #[error("curvature calibration failed after {rounds} rounds")]
    Calibration { rounds: u32 },

    #[error("penalty parameter diverged (c = {c:.3e}); boundedness assumption likely violated")]
    Divergence { c: f64 },

    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("bad instance file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
