//! Information-theoretic upper bounds ("fundamental limits") on the best
//! expected reward any sensor-based control policy can achieve, for one-step
//! and multi-step tasks, together with the benchmark environments and
//! baseline policies used to validate them.
//!
//! The pipeline: a task exposes open-loop reward expectations and the
//! f-informativity of its sensor under propagated open-loop state
//! distributions; a backward dynamic program turns those into an upper bound
//! on the best closed-loop reward by repeatedly inverting the Bernoulli
//! f-divergence. Exact evaluation is available for finite POMDPs and
//! linear-Gaussian systems; black-box environments are handled by sampling
//! plus concentration inequalities under a union-bound confidence budget.

pub mod baselines;
pub mod bound;
pub mod divergence;
pub mod env;
pub mod error;
pub mod finverse;
pub mod informativity;
pub mod rng;

pub use error::{Error, Result};
