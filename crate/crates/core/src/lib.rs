//! GI/GI/1 processor-sharing queues with impatient jobs.
//!
//! The crate has three layers:
//!
//! - [`sim`]: an event-driven simulator of the stochastic queue, with the
//!   measure-valued state descriptor (one point per job at its residual
//!   service time and residual lead time) and the fluid scaling `r`.
//! - [`fluid`] and [`steady`]: the deterministic fluid model. The trajectory
//!   solver runs a monotone Picard iteration for the maximal solution of the
//!   fluid equation; the steady module solves the fixed-point equation
//!   `z = lambda E[min{z B, D}]` and evaluates the limiting measure.
//! - [`validate`]: closed-form oracles for the solvable families and the
//!   convergence experiment comparing scaled simulations with the fluid
//!   solution.
//!
//! [`laws`] carries the joint law of service time and lead time that all
//! three layers consume. Laws are immutable after construction and safe to
//! share across threads; all sampling goes through explicit
//! [`rng::RandStream`] state.

pub mod error;
pub mod export;
pub mod fluid;
pub mod laws;
pub mod quad;
pub mod rng;
pub mod sim;
pub mod steady;
pub mod validate;

pub use error::{Error, Result};
pub use laws::{FeasibilityReport, JointLaw, ModelData, ScalarKind, ScalarLaw};
