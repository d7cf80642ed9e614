//! Analytical kernels for reachability-triggered supervision of merging
//! autonomous vehicles on a single-lane ring road.
//!
//! * [`reachability`] decides when a merge needs a human supervisor.
//! * [`bounds`] evaluates the probability that some in-ring vehicle can
//!   reach the merge point, in closed form, by quadrature and by sampling.
//! * [`queueing`] sizes a shared pool of remote supervisors.

pub mod bounds;
pub mod error;
pub mod quadrature;
pub mod queueing;
pub mod reachability;

pub use error::{DomainError, Result};
