//! Langevin samplers on random eigenblock subspaces.
//!
//! The crate provides the step kernels (LMC, PLMC, SLMC and its
//! random-coordinate special case), preconditioner schedules that produce
//! eigenblock partitions, target potentials with directional-derivative
//! accounting, and the metrics and exact oracles used to check them.

pub mod error;
pub mod linalg;
pub mod metrics;
pub mod preconditioners;
pub mod rng;
pub mod samplers;
pub mod targets;
pub mod validation;

pub use error::{Error, Result};
pub use rng::RandomStream;
