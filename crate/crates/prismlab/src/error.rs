use thiserror::Error;

/// Errors surfaced by the exact-arithmetic layers.
///
/// Truncation overflow and inexact division are hard errors on purpose:
/// the identities this crate verifies are supposed to hold exactly at the
/// configured precision, so a failed division usually means a model bug,
/// not a rounding problem.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("prime/precision config mismatch: {0}")]
    ConfigMismatch(String),

    #[error("element is not invertible: {0}")]
    NotInvertible(String),

    #[error("inexact division: {0}")]
    InexactDivision(String),

    #[error("truncation exceeded: {0}")]
    TruncationExceeded(String),

    #[error("delta depth truncation exceeded: need depth {needed}, have {have}")]
    DepthExceeded { needed: u32, have: u32 },

    #[error("flavor mismatch: expected {expected}, got {got}")]
    FlavorMismatch { expected: String, got: String },

    #[error("not an Eisenstein polynomial: {0}")]
    NotEisenstein(String),

    #[error("solver did not converge within budget: {0}")]
    NoConvergence(String),

    #[error("bad input: {0}")]
    BadInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
