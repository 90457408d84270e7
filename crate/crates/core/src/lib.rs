//! Estimation and hierarchical Bayesian modeling for repeated sham-controlled
//! experiments.
//!
//! Each experiment pairs an active measurement `(y1, s1)` with a sham
//! measurement `(y0, s0)`. The crate provides the classical exposed-only and
//! difference estimators, a closed-form partial adjustment of the sham
//! measurement, hierarchical models over the per-study effects and biases
//! fitted with a self-contained Hamiltonian Monte Carlo sampler, and a
//! simulation harness that scores all estimators on repeated synthetic
//! datasets.

pub mod adjust;
pub mod data;
pub mod error;
pub mod estimators;
pub mod math;
pub mod model;
pub mod sampler;
pub mod sim;

pub use error::{Error, Result};
