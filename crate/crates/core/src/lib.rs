//! Reaction-ultradiffusion on finite p-adic ultrametric grids.
//!
//! The state space is the finite group `G_N^n = B_N^n / B_{-N}^n` of `p^(2Nn)`
//! points, where `B_r^n` is the p-adic ball of radius `p^r` in `Q_p^n`. A radial
//! transition kernel `J(||x||_p)` induces the ultradiffusion generator
//! `A = j_N I - a`, a Parisi-type matrix whose entries depend only on the
//! ultrametric distance between grid points. On top of the generator the crate
//! provides:
//!
//! - exact digit arithmetic, valuations and Haar volumes on the grid ([`grid`]),
//! - radial kernels with exact level-sum integration ([`kernel`]),
//! - the hierarchical operator with an `O(M·N)` fast apply, Q-matrix
//!   validation, uniformized semigroup `e^{-tA}` and dense spectrum ([`operator`]),
//! - bistable reaction terms `f` with the admissibility constants used by the
//!   contraction solver ([`reaction`]),
//! - the discrete Helmholtz free energy and its gradient ([`energy`]),
//! - explicit and mild-solution time integrators, comparison and envelope
//!   harnesses ([`dynamics`]),
//! - patterned stationary states via damped fixed-point iteration ([`stationary`]),
//! - multi-resolution projection/embedding and convergence studies ([`approx`]),
//! - the binary snapshot format shared with the command-line tool ([`io`]).

pub mod approx;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod operator;
pub mod reaction;
pub mod state;
pub mod stationary;

pub use error::Error;
pub use grid::{ExtendedValuation, GridIndex, GridParams, LevelTree};
pub use kernel::{KernelFamily, RadialKernel, TruncatedKernel};
pub use operator::UltradiffOperator;
pub use reaction::Reaction;
pub use state::State;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
