//! Path simulation: adaptive Euler-Maruyama for the Wishart SDE, the scalar
//! CIR and squared Bessel processes, and exact Ornstein-Uhlenbeck and
//! square-OU paths.

mod euler;
mod ou;
mod params;
mod path;

pub use euler::{
    euler_step, simulate_besq, simulate_cir, simulate_wishart_adaptive, simulate_wishart_adaptive_with,
    AdaptiveOptions, STEP_UNDERFLOW,
};
pub use ou::{
    ou_transition_covariance, sample_ou_transition, sample_square_ou_terminal, simulate_square_ou, OuTransition,
};
pub use params::{CirParams, OuParams, WishartParams};
pub use path::PathRecord;
