//! Gradient-filtered genetic sampling for surrogate models of oscillatory
//! ODE systems: ground-truth labeling, an MLP surrogate, the two-layer
//! sampler, comparison samplers, metrics and an experiment harness.

pub mod baselines;
pub mod error;
pub mod harness;
pub mod hggs;
pub mod io_util;
pub mod metrics;
pub mod ode_lab;
pub mod seeding;
pub mod surrogate;

pub use error::{Error, Result};
