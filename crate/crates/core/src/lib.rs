//! Convergence-diagnostic step sizes for SGD.
//!
//! Constant-step SGD on a strongly convex problem first makes fast progress
//! (transient phase) and then oscillates in an O(√γ) neighbourhood of the
//! optimum (stationary phase). This crate implements restart tests that try
//! to detect that transition and drop the step size by a factor r when it is
//! reached:
//!
//! - the omniscient **oracle** test comparing the closed-form bias term
//!   against the variance floor,
//! - **Pflug's** running average of inner products of consecutive stochastic
//!   gradients (which provably fails to concentrate fast enough), and
//! - the **distance-based** test tracking the log-log slope of
//!   ‖θ_n − θ_restart‖² at geometric checkpoints.
//!
//! Around them sit synthetic and dataset-backed problems
//! ([`problems`]), a sequential SGD engine with trace recording
//! ([`engine`]), exact second-moment formulas for quadratics with additive
//! noise ([`quadratic_oracle`]) and a seeded Monte Carlo harness
//! ([`harness`]) that reproduces the synthetic experiments, including the
//! sign experiment demonstrating the failure mode of Pflug's statistic.

// Validation guards use `!(x > 0.0)` so NaN inputs are rejected alongside
// non-positive ones; `x <= 0.0` would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod problems;
pub mod quadratic_oracle;
pub mod quadrature;
pub mod rng;
pub mod schedule;

pub use error::{Error, Result};
