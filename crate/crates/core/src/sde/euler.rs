//! Adaptive Euler-Maruyama for the Wishart SDE and its one-dimensional
//! specialisations (CIR, squared Bessel).
//!
//! Every proposed state is tested against the cone. A rejected proposal over
//! `[t, t+h]` is replaced by one over `[t, t+h/2]`, driven by the Brownian
//! increment drawn from the bridge between the known endpoints. Halving
//! repeats until the proposal is accepted or the step underflows. After an
//! accepted step the next one starts again from `h0`.

use crate::error::{Result, WishartError};
use crate::matrix::{sqrt_psd_with_tol, within_cone, GeneralMatrix, PsdMatrix, SymMatrix, DEFAULT_PSD_TOL};
use crate::rng::RngStream;
use crate::samplers::{bm_increment, bridge_refine};

use super::params::{CirParams, WishartParams};
use super::path::PathRecord;

/// Steps below this size abort the simulation (double-precision epsilon).
pub const STEP_UNDERFLOW: f64 = 2.22e-16;

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    /// Relative PSD tolerance of the acceptance test.
    pub psd_tol: f64,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            psd_tol: DEFAULT_PSD_TOL,
        }
    }
}

/// One Euler-Maruyama update
/// `S + √S dB Q + Qᵀ dBᵀ √S + (S K + Kᵀ S + α QᵀQ) h`, symmetrised.
/// The result may leave the cone; acceptance is the caller's decision.
pub fn euler_step(s: &PsdMatrix, db: &GeneralMatrix, h: f64, params: &WishartParams) -> Result<SymMatrix> {
    if !(h > 0.0) {
        return Err(WishartError::NonPositiveStep(h));
    }
    let stepper = WishartStepper::new(params);
    let root = sqrt_psd_with_tol(s, DEFAULT_PSD_TOL)?.into_sym().into_inner();
    Ok(stepper.propose(s, &root, db, h))
}

/// A discretised SDE on `p×p` symmetric states driven by a `p×p` Brownian motion.
trait EulerScheme {
    fn dim(&self) -> usize;

    fn root(&self, state: &SymMatrix, psd_tol: f64) -> Result<GeneralMatrix> {
        Ok(sqrt_psd_with_tol(state, psd_tol)?.into_sym().into_inner())
    }

    fn propose(&self, state: &SymMatrix, root: &GeneralMatrix, db: &GeneralMatrix, h: f64) -> SymMatrix;
}

struct WishartStepper<'a> {
    q: &'a GeneralMatrix,
    k: &'a GeneralMatrix,
    drift_fix: GeneralMatrix,
}

impl<'a> WishartStepper<'a> {
    fn new(params: &'a WishartParams) -> Self {
        WishartStepper {
            q: &params.q,
            k: &params.k,
            drift_fix: params.drift_fix(),
        }
    }
}

impl EulerScheme for WishartStepper<'_> {
    fn dim(&self) -> usize {
        self.q.nrows()
    }

    fn propose(&self, state: &SymMatrix, root: &GeneralMatrix, db: &GeneralMatrix, h: f64) -> SymMatrix {
        let s = state.as_matrix();
        let vol = root * db * self.q;
        let drift = s * self.k;
        let r = s + &vol + vol.transpose() + (&drift + drift.transpose() + &self.drift_fix) * h;
        SymMatrix::symmetrize(&r)
    }
}

/// Scalar `dx = 2q √x dβ + (2k x + c) dt` in the coefficients of the
/// one-dimensional Wishart SDE, evaluated in the same operation order as the
/// matrix update so the two agree bit for bit.
struct ScalarStepper {
    q: f64,
    k: f64,
    drift_fix: f64,
}

impl ScalarStepper {
    fn from_cir(cir: &CirParams) -> Self {
        let q = cir.sigma / 2.0;
        let k = -cir.a / 2.0;
        let drift_fix = if cir.sigma > 0.0 {
            let alpha = 4.0 * cir.a * cir.b / (cir.sigma * cir.sigma);
            (q * q) * alpha
        } else {
            cir.a * cir.b
        };
        ScalarStepper { q, k, drift_fix }
    }

    fn besq(alpha: f64) -> Self {
        ScalarStepper {
            q: 1.0,
            k: 0.0,
            drift_fix: alpha,
        }
    }
}

impl EulerScheme for ScalarStepper {
    fn dim(&self) -> usize {
        1
    }

    fn propose(&self, state: &SymMatrix, root: &GeneralMatrix, db: &GeneralMatrix, h: f64) -> SymMatrix {
        let x = state.get(0, 0);
        let v = (root[(0, 0)] * db[(0, 0)]) * self.q;
        let d = x * self.k;
        let r = ((x + v) + v) + ((d + d) + self.drift_fix) * h;
        SymMatrix::from_diagonal(&[r])
    }
}

fn accepted(proposal: &SymMatrix, psd_tol: f64) -> bool {
    let ev = proposal.eigenvalues();
    let norm = ev.iter().fold(0.0_f64, |acc, l| acc.max(l.abs()));
    within_cone(ev[0], norm, psd_tol)
}

fn run_adaptive(
    scheme: &impl EulerScheme,
    s0: SymMatrix,
    horizon: f64,
    h0: f64,
    existence_certified: bool,
    opts: AdaptiveOptions,
    rng: &mut RngStream,
) -> Result<PathRecord> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(WishartError::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    if !(h0 > 0.0 && h0 <= horizon) {
        return Err(WishartError::NonPositiveStep(h0));
    }
    let p = scheme.dim();
    let capacity = (horizon / h0).ceil() as usize + 1;
    let mut times = Vec::with_capacity(capacity);
    let mut states = Vec::with_capacity(capacity);
    times.push(0.0);
    states.push(s0);

    let mut t = 0.0;
    let mut min_step = h0;
    let mut halvings = 0;
    while t < horizon {
        let state = states.last().expect("non-empty");
        let remaining = horizon - t;
        let last = remaining <= h0 * (1.0 + 1e-9);
        let mut h = if last { remaining } else { h0 };
        let root = scheme.root(state, opts.psd_tol)?;
        let mut db = bm_increment(p, h, rng)?;
        let mut proposal = scheme.propose(state, &root, &db, h);
        let mut halved = false;
        while !accepted(&proposal, opts.psd_tol) {
            let full = h;
            h *= 0.5;
            if h < STEP_UNDERFLOW {
                return Err(WishartError::StepUnderflow { t, h });
            }
            db = bridge_refine(&db, full, rng)?;
            proposal = scheme.propose(state, &root, &db, h);
            halvings += 1;
            halved = true;
        }
        min_step = min_step.min(h);
        t = if last && !halved { horizon } else { t + h };
        times.push(t);
        states.push(proposal);
    }
    Ok(PathRecord {
        times,
        states,
        min_step_used: min_step,
        halving_events: halvings,
        existence_certified,
    })
}

/// Adaptive Euler-Maruyama path of the Wishart SDE on `[0, horizon]`.
pub fn simulate_wishart_adaptive(
    params: &WishartParams,
    horizon: f64,
    h0: f64,
    rng: &mut RngStream,
) -> Result<PathRecord> {
    simulate_wishart_adaptive_with(params, horizon, h0, AdaptiveOptions::default(), rng)
}

pub fn simulate_wishart_adaptive_with(
    params: &WishartParams,
    horizon: f64,
    h0: f64,
    opts: AdaptiveOptions,
    rng: &mut RngStream,
) -> Result<PathRecord> {
    let certified = params.existence_certified();
    if !certified {
        log::warn!(
            "alpha = {} with p = {}: outside the certified existence regime (alpha >= p+1, Q invertible)",
            params.alpha,
            params.dim()
        );
    }
    let stepper = WishartStepper::new(params);
    run_adaptive(&stepper, params.s0.as_sym().clone(), horizon, h0, certified, opts, rng)
}

/// Adaptive Euler path of the CIR process, non-negativity enforced by halving.
pub fn simulate_cir(params: &CirParams, horizon: f64, h0: f64, rng: &mut RngStream) -> Result<PathRecord> {
    let stepper = ScalarStepper::from_cir(params);
    let certified = params.sigma > 0.0 && 4.0 * params.a * params.b / (params.sigma * params.sigma) >= 2.0;
    run_adaptive(
        &stepper,
        SymMatrix::from_diagonal(&[params.r0]),
        horizon,
        h0,
        certified,
        AdaptiveOptions::default(),
        rng,
    )
}

/// Adaptive Euler path of the squared Bessel process `dX = 2√X dβ + α dt`.
pub fn simulate_besq(alpha: f64, x0: f64, horizon: f64, h0: f64, rng: &mut RngStream) -> Result<PathRecord> {
    if !(alpha >= 0.0 && x0 >= 0.0 && alpha.is_finite() && x0.is_finite()) {
        return Err(WishartError::InvalidParameter(format!(
            "BESQ needs alpha, x0 >= 0 (got {alpha}, {x0})"
        )));
    }
    run_adaptive(
        &ScalarStepper::besq(alpha),
        SymMatrix::from_diagonal(&[x0]),
        horizon,
        h0,
        true,
        AdaptiveOptions::default(),
        rng,
    )
}
