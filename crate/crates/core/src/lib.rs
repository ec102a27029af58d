//! Wishart processes on the cone of positive semidefinite matrices:
//! adaptive Euler simulation, exact square-OU paths, closed-form laws,
//! Monte Carlo validation and factor-model bond pricing.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod distribution;
pub mod error;
pub mod finance;
pub mod matrix;
pub mod mc;
pub mod rng;
pub mod samplers;
pub mod sde;
mod serde_matrix;
pub mod validation;

pub use error::{Result, WishartError};
pub use matrix::{GeneralMatrix, PsdMatrix, SymMatrix};
pub use mc::McSummary;
pub use rng::RngStream;
