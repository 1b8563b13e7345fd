//! Error type shared by the sampling and oracle modules.

use alloc::string::String;

/// Errors raised by samplers, targets, metrics and the grid oracle.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    /// An argument violated a documented precondition.
    #[error("contract violation: {0}")]
    Contract(&'static str),

    /// Vector or matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A configuration field is outside its allowed range.
    #[error("invalid config: {0}")]
    InvalidConfig(&'static str),

    /// An evaluation produced a non-finite value.
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    /// A sampler step produced a non-finite particle; the step was not
    /// committed.
    #[error("divergence at iteration {iteration}, particle {particle}")]
    Divergence { iteration: u64, particle: usize },

    /// Explicit-scheme stability bound violated.
    #[error("unstable time step: dt = {dt} exceeds bound {bound}")]
    UnstableStep { dt: f64, bound: f64 },

    /// The conservative solver lost more mass than allowed.
    #[error("mass drift {drift} exceeds tolerance over unit time")]
    MassDrift { drift: f64 },

    /// Grid mismatch between two densities.
    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),

    /// Inner optimizer did not reach stationarity within the iteration cap.
    #[error("no convergence after {iterations} iterations (objective {objective})")]
    NoConvergence { iterations: usize, objective: f64 },

    /// Free-form invariant violation with context.
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = core::result::Result<T, CoreError>;
