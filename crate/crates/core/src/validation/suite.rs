//! The default validation suite run by `wishart-sim validate` and the
//! acceptance test target.
//!
//! Every check derives its streams from `(seed, check index)`, so a check
//! gives the same reports whether it runs alone or inside the full suite.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{empirical_laplace, empirical_quadratic_covariation, positivity_report, theoretical_quadratic_covariation};
use super::{ValidationReport, DEFAULT_Z_MAX};
use crate::distribution::{cir_transition_params, conditional_wishart_params, mean_reversion_target, wishart_laplace};
use crate::error::{Result, WishartError};
use crate::finance::{bond_price_mc, cir_bond_closed_form, cir_bond_exponents, FactorModel};
use crate::matrix::{
    lyapunov_apply, lyapunov_solve, max_real_eigenvalue, rcond, sqrt_psd, GeneralMatrix, PsdMatrix, SymMatrix,
};
use crate::mc::{par_paths, McSummary};
use crate::rng::RngStream;
use crate::samplers::WishartLawParams;
use crate::sde::{
    sample_square_ou_terminal, simulate_besq, simulate_cir, simulate_wishart_adaptive, CirParams, OuParams,
    OuTransition, WishartParams,
};

pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    ConePositivity,
    ConditionalLaw,
    EulerWeakAccuracy,
    BesqMean,
    CirTransition,
    Stationarity,
    QuadraticCovariation,
    SolverProperties,
    BridgeRefinement,
}

impl Check {
    pub const ALL: [Check; 9] = [
        Check::ConePositivity,
        Check::ConditionalLaw,
        Check::EulerWeakAccuracy,
        Check::BesqMean,
        Check::CirTransition,
        Check::Stationarity,
        Check::QuadraticCovariation,
        Check::SolverProperties,
        Check::BridgeRefinement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::ConePositivity => "cone_positivity",
            Check::ConditionalLaw => "conditional_law",
            Check::EulerWeakAccuracy => "euler_weak_accuracy",
            Check::BesqMean => "besq_mean",
            Check::CirTransition => "cir_transition",
            Check::Stationarity => "stationarity",
            Check::QuadraticCovariation => "quadratic_covariation",
            Check::SolverProperties => "solver_properties",
            Check::BridgeRefinement => "bridge_refinement",
        }
    }

    fn stream_index(self) -> u64 {
        Check::ALL.iter().position(|c| *c == self).expect("listed") as u64 + 1
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = WishartError;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| WishartError::InvalidParameter(format!("unknown check `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    pub z_max: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: DEFAULT_SEED,
            z_max: DEFAULT_Z_MAX,
        }
    }
}

pub fn run_suite(checks: &[Check], opts: &SuiteOptions) -> Result<Vec<ValidationReport>> {
    let mut out = Vec::new();
    for &check in checks {
        out.extend(run_check(check, opts)?);
    }
    Ok(out)
}

pub fn run_check(check: Check, opts: &SuiteOptions) -> Result<Vec<ValidationReport>> {
    let streams = Streams {
        seed: opts.seed,
        base: check.stream_index() * Streams::SLOTS,
    };
    log::info!("running check {check}");
    match check {
        Check::ConePositivity => cone_positivity(&streams),
        Check::ConditionalLaw => conditional_law(&streams, opts.z_max),
        Check::EulerWeakAccuracy => euler_weak_accuracy(&streams, opts.z_max),
        Check::BesqMean => besq_mean(&streams, opts.z_max),
        Check::CirTransition => cir_transition(&streams, opts.z_max),
        Check::Stationarity => stationarity(&streams),
        Check::QuadraticCovariation => quadratic_covariation(&streams),
        Check::SolverProperties => solver_properties(&streams),
        Check::BridgeRefinement => bridge_refinement(&streams),
    }
}

/// Root streams of one check: slot `i` maps to stream index `base + i`,
/// well below 2³² so the per-path children never collide.
struct Streams {
    seed: u64,
    base: u64,
}

impl Streams {
    const SLOTS: u64 = 64;

    fn root(&self, slot: u64) -> RngStream {
        debug_assert!(slot < Self::SLOTS - 1);
        RngStream::new(self.seed, self.base + slot)
    }

    /// Stream for randomly drawn parameters.
    fn aux(&self) -> RngStream {
        RngStream::new(self.seed, self.base + Self::SLOTS - 1)
    }
}

fn scaled_identity(p: usize, c: f64) -> GeneralMatrix {
    GeneralMatrix::identity(p, p) * c
}

fn test_matrices() -> Vec<(&'static str, PsdMatrix)> {
    let psd = |rows: &[Vec<f64>]| PsdMatrix::new(SymMatrix::from_rows(rows).expect("symmetric")).expect("psd");
    vec![
        ("U=0.1I", psd(&[vec![0.1, 0.0], vec![0.0, 0.1]])),
        ("U=diag(0.2,0.05)", psd(&[vec![0.2, 0.0], vec![0.0, 0.05]])),
        ("U=0.1[[2,1],[1,2]]", psd(&[vec![0.2, 0.1], vec![0.1, 0.2]])),
    ]
}

/// `W_2(3, Σ_1, Θ_1)` for `A = I`, `B = -I`, `s0 = I` at `t = 1`.
fn reference_ou() -> Result<(OuParams, WishartLawParams)> {
    let ou = OuParams::with_identity_start(3, GeneralMatrix::identity(2, 2), scaled_identity(2, -1.0))?;
    let law = conditional_wishart_params(&ou, &PsdMatrix::identity(2), 1.0)?.to_law()?;
    Ok((ou, law))
}

fn random_invertible(p: usize, rng: &mut RngStream) -> GeneralMatrix {
    loop {
        let g = rng.standard_normal_matrix(p, p);
        if rcond(&g) >= 1e-3 {
            return g;
        }
    }
}

fn cone_positivity(streams: &Streams) -> Result<Vec<ValidationReport>> {
    let mut aux = streams.aux();
    let mut reports = Vec::new();
    for (slot, p) in [1usize, 2, 3, 5].into_iter().enumerate() {
        let q = random_invertible(p, &mut aux);
        let params = WishartParams::new(q, scaled_identity(p, -4.0), (p + 1) as f64, PsdMatrix::identity(p))?;
        let sub = streams.root(slot as u64);
        let counts = par_paths(&sub, 100, |_, rng| {
            let path = simulate_wishart_adaptive(&params, 1.0, 1e-3, rng)?;
            Ok(positivity_report(&path, 1e-8).violations)
        })?;
        let total: usize = counts.iter().sum();
        reports.push(ValidationReport::tolerance(
            format!("cone_positivity/p={p}/violations"),
            total as f64,
            0.0,
            0.0,
        ));
    }
    Ok(reports)
}

fn conditional_law(streams: &Streams, z_max: f64) -> Result<Vec<ValidationReport>> {
    let (ou, law) = reference_ou()?;
    let kernel = OuTransition::new(&ou, 1.0)?;
    let states = par_paths(&streams.root(0), 10_000, |_, rng| Ok(sample_square_ou_terminal(&kernel, &ou, rng).into_sym()))?;
    test_matrices()
        .into_iter()
        .map(|(label, u)| {
            let est = empirical_laplace(&states, &u)?;
            Ok(ValidationReport::new(format!("conditional_law/{label}"), est, wishart_laplace(&u, &law), z_max))
        })
        .collect()
}

fn euler_weak_accuracy(streams: &Streams, z_max: f64) -> Result<Vec<ValidationReport>> {
    let (_, law) = reference_ou()?;
    let params = WishartParams::new(
        GeneralMatrix::identity(2, 2),
        scaled_identity(2, -1.0),
        3.0,
        PsdMatrix::identity(2),
    )?;
    let states = par_paths(&streams.root(0), 10_000, |_, rng| {
        Ok(simulate_wishart_adaptive(&params, 1.0, 1e-3, rng)?.terminal().clone())
    })?;
    test_matrices()
        .into_iter()
        .map(|(label, u)| {
            let est = empirical_laplace(&states, &u)?;
            Ok(ValidationReport::with_abs_tol(
                format!("euler_weak_accuracy/{label}"),
                est,
                wishart_laplace(&u, &law),
                z_max,
                1e-2,
            ))
        })
        .collect()
}

fn besq_mean(streams: &Streams, z_max: f64) -> Result<Vec<ValidationReport>> {
    let x0 = 0.5;
    let mut reports = Vec::new();
    for (slot, alpha) in [0.5, 2.0].into_iter().enumerate() {
        let sub = streams.root(slot as u64);
        let paths = par_paths(&sub, 10_000, |_, rng| {
            let path = simulate_besq(alpha, x0, 1.0, 1e-3, rng)?;
            let positive = path.states.iter().all(|s| s.get(0, 0) > 0.0);
            Ok((path.terminal().get(0, 0), positive))
        })?;
        let terminal: Vec<f64> = paths.iter().map(|(x, _)| *x).collect();
        reports.push(ValidationReport::new(
            format!("besq_mean/alpha={alpha}"),
            McSummary::from_samples(&terminal)?,
            x0 + alpha,
            z_max,
        ));
        if alpha >= 2.0 {
            let touching = paths.iter().filter(|(_, positive)| !positive).count();
            reports.push(ValidationReport::tolerance(
                format!("besq_positivity/alpha={alpha}/non_positive_paths"),
                touching as f64,
                0.0,
                0.0,
            ));
        }
    }
    Ok(reports)
}

fn cir_transition(streams: &Streams, z_max: f64) -> Result<Vec<ValidationReport>> {
    let cir = CirParams::new(1.0, 0.05, 0.1, 0.05)?;
    let law = cir_transition_params(&cir, 1.0)?;
    let terminal = par_paths(&streams.root(0), 10_000, |_, rng| {
        Ok(simulate_cir(&cir, 1.0, 1e-3, rng)?.terminal().get(0, 0))
    })?;
    let model = FactorModel::cir_replica(&cir)?;
    let price = bond_price_mc(&model, None, 1.0, 10_000, 1e-3, &streams.root(1))?;
    let (f0, g0) = cir_bond_exponents(&cir, 0.0);
    Ok(vec![
        ValidationReport::new("cir_transition/mean", McSummary::from_samples(&terminal)?, law.mean(), z_max),
        ValidationReport::new("cir_bond/mc_vs_closed_form", price, cir_bond_closed_form(&cir, cir.r0, 1.0), z_max),
        ValidationReport::tolerance("cir_bond/f(0)", f0, 0.0, 1e-14),
        ValidationReport::tolerance("cir_bond/g(0)", g0, 0.0, 1e-14),
    ])
}

fn stationarity(streams: &Streams) -> Result<Vec<ValidationReport>> {
    let p = 2;
    let params = WishartParams::new(
        GeneralMatrix::identity(p, p),
        scaled_identity(p, -2.0),
        (p + 1) as f64,
        PsdMatrix::identity(p),
    )?;
    let target = mean_reversion_target(&params)?;
    let averages = par_paths(&streams.root(0), 50, |_, rng| {
        simulate_wishart_adaptive(&params, 50.0, 1e-3, rng)?.time_average(5.0, 50.0)
    })?;
    // off-diagonal targets vanish, so the 10% band is taken relative to the largest entry
    let tol = 0.1 * target.as_matrix().amax();
    let mut reports = Vec::new();
    for j in 0..p {
        for i in 0..=j {
            let entries: Vec<f64> = averages.iter().map(|a| a.get(i, j)).collect();
            reports.push(ValidationReport::with_abs_tol(
                format!("stationarity/S[{},{}]", i + 1, j + 1),
                McSummary::from_samples(&entries)?,
                target.get(i, j),
                0.0,
                tol,
            ));
        }
    }
    Ok(reports)
}

fn quadratic_covariation(streams: &Streams) -> Result<Vec<ValidationReport>> {
    let q = GeneralMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, -3.0]);
    let params = WishartParams::new(q, scaled_identity(2, -4.0), 3.0, PsdMatrix::identity(2))?;
    let qtq = params.qtq();
    let pairs = par_paths(&streams.root(0), 100, |_, rng| {
        let path = simulate_wishart_adaptive(&params, 0.1, 1e-4, rng)?;
        Ok((
            empirical_quadratic_covariation(&path, 0, 0, 0, 0)?,
            theoretical_quadratic_covariation(&path, &qtq, 0, 0, 0, 0)?,
        ))
    })?;
    let empirical: Vec<f64> = pairs.iter().map(|(e, _)| *e).collect();
    let theory = pairs.iter().map(|(_, t)| *t).sum::<f64>() / pairs.len() as f64;
    Ok(vec![ValidationReport::with_abs_tol(
        "quadratic_covariation/S11",
        McSummary::from_samples(&empirical)?,
        theory,
        0.0,
        0.1 * theory.abs(),
    )])
}

fn solver_properties(streams: &Streams) -> Result<Vec<ValidationReport>> {
    let mut aux = streams.aux();
    let mut lyap = 0.0_f64;
    for _ in 0..100 {
        let g = aux.standard_normal_matrix(3, 3);
        let b = &g - GeneralMatrix::identity(3, 3) * (max_real_eigenvalue(&g) + 0.5);
        let m = SymMatrix::symmetrize(&aux.standard_normal_matrix(3, 3));
        let x = lyapunov_solve(&b, &m)?;
        lyap = lyap.max((lyapunov_apply(&b, &x).as_matrix() - m.as_matrix()).amax());
    }
    let mut root_err = 0.0_f64;
    for trial in 0..100 {
        // every fourth matrix is rank deficient
        let rows = if trial % 4 == 0 { 2 } else { 4 };
        let s = PsdMatrix::gram(&aux.standard_normal_matrix(rows, 4));
        let r = sqrt_psd(&s)?;
        root_err = root_err.max((r.as_matrix() * r.as_matrix() - s.as_matrix()).amax());
    }
    let mut mismatches = 0usize;
    for (slot, cir) in [
        CirParams::new(1.0, 0.05, 0.1, 0.05)?,
        CirParams::new(2.0, 0.3, 0.8, 0.1)?,
        CirParams::new(0.5, 0.02, 0.4, 0.0)?,
    ]
    .into_iter()
    .enumerate()
    {
        let wishart = cir.to_wishart()?;
        for path in 0..20u64 {
            let stream = streams.root(slot as u64).path_stream(path);
            let a = simulate_cir(&cir, 1.0, 1e-2, &mut stream.clone())?;
            let b = simulate_wishart_adaptive(&wishart, 1.0, 1e-2, &mut stream.clone())?;
            let same = a.times.len() == b.times.len()
                && a.times.iter().zip(&b.times).all(|(x, y)| x.to_bits() == y.to_bits())
                && a.states.iter().zip(&b.states).all(|(x, y)| x.get(0, 0).to_bits() == y.get(0, 0).to_bits());
            mismatches += usize::from(!same);
        }
    }
    Ok(vec![
        ValidationReport::tolerance("solver/lyapunov_residual", lyap, 0.0, 1e-10),
        ValidationReport::tolerance("solver/sqrt_round_trip", root_err, 0.0, 1e-10),
        ValidationReport::tolerance("solver/p1_wishart_cir_mismatched_paths", mismatches as f64, 0.0, 0.0),
    ])
}

fn bridge_refinement(streams: &Streams) -> Result<Vec<ValidationReport>> {
    let mut rng = streams.root(0);
    let (h, n) = (0.01, 100_000);
    let y = GeneralMatrix::from_row_slice(2, 2, &[0.3, -0.1, 0.05, 0.2]);
    let draws: Vec<GeneralMatrix> = (0..n)
        .map(|_| crate::samplers::bridge_refine(&y, h, &mut rng))
        .collect::<Result<_>>()?;
    let mut reports = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            let xs: Vec<f64> = draws.iter().map(|d| d[(i, j)]).collect();
            let summary = McSummary::from_samples(&xs)?;
            let var = summary.std_error.expect("n > 1").powi(2) * n as f64;
            reports.push(ValidationReport::new(
                format!("bridge/mean[{},{}]", i + 1, j + 1),
                summary,
                y[(i, j)] / 2.0,
                4.0,
            ));
            reports.push(ValidationReport::tolerance(
                format!("bridge/variance[{},{}]", i + 1, j + 1),
                var,
                h / 4.0,
                0.02 * h / 4.0,
            ));
        }
    }
    Ok(reports)
}
