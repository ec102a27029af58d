//! Exact transitions of the matrix Ornstein-Uhlenbeck process and the
//! square-OU Wishart paths built from them.

use crate::error::{Result, WishartError};
use crate::matrix::{expm, lyapunov_solve, sqrt_psd, GeneralMatrix, PsdMatrix, SymMatrix};
use crate::rng::RngStream;

use super::params::OuParams;
use super::path::PathRecord;

/// Transition covariance `Σ_dt = A_B⁻¹(AᵀA - e^{Bᵀdt} AᵀA e^{B dt})`.
///
/// Computed as a single solve on the difference, so `Σ_0 = 0` exactly.
pub fn ou_transition_covariance(params: &OuParams, dt: f64) -> Result<SymMatrix> {
    let ata = params.ata();
    let e = expm(&params.b, dt);
    let rhs = ata.sub(&ata.congruence(&e));
    lyapunov_solve(&params.b, &rhs)
}

/// Gaussian transition kernel over a fixed `dt`:
/// `X_{t+dt} | X_t ~ N_{n,p}(X_t e^{B dt}, I_n ⊗ Σ_dt)`.
#[derive(Debug, Clone)]
pub struct OuTransition {
    dt: f64,
    propagator: GeneralMatrix,
    noise_root: GeneralMatrix,
}

impl OuTransition {
    pub fn new(params: &OuParams, dt: f64) -> Result<Self> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(WishartError::InvalidParameter(format!("dt must be >= 0, got {dt}")));
        }
        let cov = ou_transition_covariance(params, dt)?;
        Ok(OuTransition {
            dt,
            propagator: expm(&params.b, dt),
            noise_root: sqrt_psd(&cov)?.into_sym().into_inner(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn covariance_root(&self) -> &GeneralMatrix {
        &self.noise_root
    }

    pub fn sample(&self, x: &GeneralMatrix, rng: &mut RngStream) -> GeneralMatrix {
        if self.dt == 0.0 {
            return x.clone();
        }
        let z = rng.standard_normal_matrix(x.nrows(), x.ncols());
        x * &self.propagator + z * &self.noise_root
    }
}

pub fn sample_ou_transition(params: &OuParams, x: &GeneralMatrix, dt: f64, rng: &mut RngStream) -> Result<GeneralMatrix> {
    if x.nrows() != params.n || x.ncols() != params.dim() {
        return Err(WishartError::DimensionMismatch(format!(
            "state is {}x{}, expected {}x{}",
            x.nrows(),
            x.ncols(),
            params.n,
            params.dim()
        )));
    }
    Ok(OuTransition::new(params, dt)?.sample(x, rng))
}

/// Exact Wishart path `S_t = X_tᵀ X_t` on `grid`, iterating the OU transition.
pub fn simulate_square_ou(params: &OuParams, grid: &[f64], rng: &mut RngStream) -> Result<PathRecord> {
    let p = params.dim();
    if params.n < p + 1 {
        return Err(WishartError::BadDof {
            dof: params.n as f64,
            dim: p,
        });
    }
    if grid.first() != Some(&0.0) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(WishartError::InvalidParameter(
            "grid must start at 0 and be strictly increasing".into(),
        ));
    }
    let mut x = params.x0.clone();
    let mut states = Vec::with_capacity(grid.len());
    states.push(PsdMatrix::gram(&x).into_sym());
    let mut cached: Option<OuTransition> = None;
    let mut min_step = f64::INFINITY;
    for w in grid.windows(2) {
        let dt = w[1] - w[0];
        min_step = min_step.min(dt);
        let reuse = cached.as_ref().is_some_and(|c| c.dt() == dt);
        if !reuse {
            cached = Some(OuTransition::new(params, dt)?);
        }
        x = cached.as_ref().expect("set above").sample(&x, rng);
        states.push(PsdMatrix::gram(&x).into_sym());
    }
    Ok(PathRecord {
        times: grid.to_vec(),
        states,
        min_step_used: if min_step.is_finite() { min_step } else { 0.0 },
        halving_events: 0,
        existence_certified: true,
    })
}

/// Terminal state `X_tᵀ X_t` of the square-OU process after one exact step.
pub fn sample_square_ou_terminal(transition: &OuTransition, params: &OuParams, rng: &mut RngStream) -> PsdMatrix {
    PsdMatrix::gram(&transition.sample(&params.x0, rng))
}
