//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors produced by law constructors, solvers, and the simulator.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A constructor argument violates a structural invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An expectation of the form `E[min{zB, D}]` diverges.
    #[error("nonintegrable expectation: {0}")]
    Nonintegrable(String),

    /// One or more feasibility conditions fail for the requested operation.
    #[error("model infeasible: {}", .0.join("; "))]
    Infeasible(Vec<String>),

    /// An iterative solver exhausted its iteration budget.
    #[error("no convergence after {iterations} iterations (sup-diff {sup_diff:.3e})")]
    NoConvergence { iterations: usize, sup_diff: f64 },

    /// Root bracketing failed.
    #[error("bracketing failed: {0}")]
    Bracket(String),

    /// The problem data admits no meaningful solution (e.g. z0 = 0 and lambda = 0).
    #[error("degenerate problem: {0}")]
    Degenerate(String),

    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested closed form is not available for this law variant.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A simulation configuration is invalid.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
