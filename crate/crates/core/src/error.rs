use thiserror::Error;

use crate::quad::QuadError;

pub type Result<T> = std::result::Result<T, Error>;

/// A mode index `k` (1-based) with the offending coefficient `psi_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffendingMode {
    pub k: usize,
    pub psi: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Quadrature(#[from] QuadError),

    #[error("tail truncation radius {radius} leaves a tail bound of {bound:e}, above abs_tol {abs_tol:e}")]
    TailTooLarge {
        radius: f64,
        bound: f64,
        abs_tol: f64,
    },

    #[error(
        "orthogonality condition violated for resonant modes {modes:?} (tolerance {tolerance:e})"
    )]
    OrthogonalityViolation {
        modes: Vec<OffendingMode>,
        tolerance: f64,
    },

    #[error("free value given for mode {0}, which is not in the resonant set")]
    FreeValueOutsideKernel(usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("spectrum has no eigenfunction evaluator (coefficient-space only)")]
    NoEigenfunctions,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid spectrum table: {0}")]
    SpectrumTable(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
