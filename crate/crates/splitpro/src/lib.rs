//! Finite-horizon linear-quadratic tracking (LQT) over behavioral system
//! models, solved by proximal splitting.
//!
//! A behavior is the set of input/output trajectories a linear time-invariant
//! system can produce. Over a finite window it is a subspace of `R^(q*L)`,
//! representable either by a state-space model or directly by a Hankel matrix
//! built from recorded data. This crate builds orthonormal bases for such
//! subspaces, projects onto them, and solves tracking problems of the form
//!
//! ```text
//!   minimize   sum_t (w(t) - w_ref(t))' Phi (w(t) - w_ref(t))   over the suffix
//!   subject to w in the behavior, prefix of w fixed to recent measurements
//! ```
//!
//! Three solvers are provided: forward-backward splitting ([`splitting::fb_solve`]),
//! a three-operator splitting ([`splitting::dy_solve`]), and a distributed
//! variant ([`splitting::split_pro_solve`]) that replaces the exact behavior
//! projection with a few sweeps of alternating projections onto per-subsystem
//! behaviors and coupling constraints, so networks of systems never need a
//! centralized model.
//!
//! The [`network`] module generates benchmark networks of second-order
//! subsystems coupled over chain/ring/lattice topologies; [`lqt`] holds the
//! problem type, reference solvers, and a receding-horizon simulation loop;
//! [`cli`] wires everything to config files and CSV outputs for the
//! `splitpro` binary.

pub mod behavior;
pub mod cli;
pub(crate) mod linalg;
pub mod lqt;
pub mod network;
pub mod projection;
pub mod splitting;
pub mod trajectory;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A 1-based time index fell outside `[1, T]`.
    #[error("time range out of bounds: {0}")]
    RangeOutOfBounds(String),
    /// Hankel window depth outside `[1, T]`.
    #[error("window depth out of range: {0}")]
    DepthOutOfRange(String),
    /// Not enough data columns for the requested rank condition.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// The pair (A, C) is not observable.
    #[error("state-space model is not observable")]
    NotObservable,
    /// Requested window is shorter than the system lag.
    #[error("horizon shorter than the system lag: {0}")]
    HorizonTooShort(String),
    /// Recorded data fails the generalized persistency-of-excitation rank test.
    #[error("data is not persistently exciting: {0}")]
    NotPersistentlyExciting(String),
    /// The fixed prefix is not a valid trajectory of the behavior.
    #[error("prefix is incompatible with the behavior: {0}")]
    InfeasiblePrefix(String),
    /// Product-projector blocks do not partition the ambient coordinates.
    #[error("coordinate layout mismatch: {0}")]
    LayoutMismatch(String),
    /// Weight matrix failed the symmetric positive-definiteness check.
    #[error("weight matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    /// Step size is outside the stability interval of the splitting operator.
    #[error("step size exceeds the stability bound: {0}")]
    StepSizeTooLarge(String),
    /// A diagnostic needed recorded iterates but recording was off.
    #[error("iterates were not recorded for this solve")]
    IteratesNotRecorded,
    /// Saddle-point system could not be solved to tolerance.
    #[error("KKT system singular or badly conditioned: {0}")]
    SingularKkt(String),
    /// Constraint sets have empty intersection.
    #[error("constraints are infeasible: {0}")]
    Infeasible(String),
    /// An iterative solver failed to produce a usable result.
    #[error("solver failed: {0}")]
    SolverFailed(String),
    /// Config or CSV input could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },
    /// The requested solver needs a monolithic basis representation.
    #[error("solver requires a basis representation of the behavior")]
    BasisRequired,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
