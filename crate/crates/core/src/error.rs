//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by grid construction, kernel normalization, operator
/// assembly, solvers and integrators.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid grid parameters (non-prime p, zero dimension, size overflow, ...).
    #[error("invalid grid parameters: {0}")]
    InvalidParams(String),

    /// Two objects built over different grids were combined.
    #[error("grid parameter mismatch: {0}")]
    ParamMismatch(String),

    /// Vector length does not match the grid size.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Kernel level sums diverged or vanished.
    #[error("kernel mass error: {0}")]
    KernelMass(String),

    /// A reaction hypothesis or admissibility condition failed.
    #[error("reaction hypothesis failed: {0}")]
    Hypothesis(String),

    /// An iterative solver failed to converge or left its invariant region.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Time integration aborted (NaN or blow-up).
    #[error("integration aborted at step {step}: {reason}")]
    Integration { step: usize, reason: String },

    /// A size guard for dense verification paths was exceeded.
    #[error("size guard exceeded: {0}")]
    Guard(String),

    /// Invalid configuration value.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Snapshot or data file I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed snapshot file.
    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),
}
