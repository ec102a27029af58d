//! Statistical checks of simulated output against closed-form laws.

pub mod suite;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WishartError};
use crate::matrix::{trace_product, PsdMatrix, SymMatrix};
use crate::mc::{McAccumulator, McSummary};
use crate::sde::PathRecord;

pub const DEFAULT_Z_MAX: f64 = 3.0;

/// Outcome of one comparison between an estimate and its theoretical value.
///
/// `pass` holds iff `|estimate - theoretical| ≤ max(z_max · std_error, abs_tol)`.
/// Deterministic checks use `z_max = 0` and put the tolerance in `abs_tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub name: String,
    pub estimate: McSummary,
    pub theoretical: f64,
    pub z_score: f64,
    pub z_max: f64,
    pub abs_tol: f64,
    pub pass: bool,
}

impl ValidationReport {
    pub fn new(name: impl Into<String>, estimate: McSummary, theoretical: f64, z_max: f64) -> Self {
        Self::with_abs_tol(name, estimate, theoretical, z_max, 0.0)
    }

    pub fn with_abs_tol(name: impl Into<String>, estimate: McSummary, theoretical: f64, z_max: f64, abs_tol: f64) -> Self {
        let diff = estimate.estimate - theoretical;
        let se = estimate.std_error_or_zero();
        let z_score = if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        };
        let pass = diff.is_finite() && diff.abs() <= (z_max * se).max(abs_tol);
        ValidationReport {
            name: name.into(),
            estimate,
            theoretical,
            z_score,
            z_max,
            abs_tol,
            pass,
        }
    }

    /// A deterministic check `|value - theoretical| ≤ abs_tol`.
    pub fn tolerance(name: impl Into<String>, value: f64, theoretical: f64, abs_tol: f64) -> Self {
        let estimate = McSummary {
            estimate: value,
            std_error: Some(0.0),
            n_paths: 1,
        };
        Self::with_abs_tol(name, estimate, theoretical, 0.0, abs_tol)
    }
}

/// Mean and standard error of `etr(-U S_i)` over `states`.
pub fn empirical_laplace<'a>(states: impl IntoIterator<Item = &'a SymMatrix>, u: &PsdMatrix) -> Result<McSummary> {
    let mut acc = McAccumulator::default();
    for s in states {
        if s.dim() != u.dim() {
            return Err(WishartError::DimensionMismatch(format!("state is {0}x{0}, U is {1}x{1}", s.dim(), u.dim())));
        }
        acc.push((-trace_product(u.as_matrix(), s.as_matrix())).exp())?;
    }
    acc.finish()
}

fn check_indices(path: &PathRecord, idx: [usize; 4]) -> Result<()> {
    if path.len() < 2 {
        return Err(WishartError::InvalidParameter("path needs at least two states".into()));
    }
    let p = path.dim();
    match idx.iter().find(|&&i| i >= p) {
        Some(&index) => Err(WishartError::IndexOutOfRange { index, bound: p }),
        None => Ok(()),
    }
}

/// Realised covariation `Σ_m ΔS_ij ΔS_kl` over the path's steps (0-based indices).
pub fn empirical_quadratic_covariation(path: &PathRecord, i: usize, j: usize, k: usize, l: usize) -> Result<f64> {
    check_indices(path, [i, j, k, l])?;
    Ok(path
        .states
        .windows(2)
        .map(|w| (w[1].get(i, j) - w[0].get(i, j)) * (w[1].get(k, l) - w[0].get(k, l)))
        .sum())
}

/// Left-point rule on the path's own mesh for
/// `∫ (S_ik G_jl + S_il G_jk + S_jk G_il + S_jl G_ik) dt` with `G = QᵀQ`.
pub fn theoretical_quadratic_covariation(
    path: &PathRecord,
    qtq: &SymMatrix,
    i: usize,
    j: usize,
    k: usize,
    l: usize,
) -> Result<f64> {
    check_indices(path, [i, j, k, l])?;
    if qtq.dim() != path.dim() {
        return Err(WishartError::DimensionMismatch("QᵀQ does not match the path dimension".into()));
    }
    let g = |a, b| qtq.get(a, b);
    Ok(path
        .times
        .windows(2)
        .zip(&path.states)
        .map(|(t, s)| {
            let integrand = s.get(i, k) * g(j, l) + s.get(i, l) * g(j, k) + s.get(j, k) * g(i, l) + s.get(j, l) * g(i, k);
            integrand * (t[1] - t[0])
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub min_eigenvalue: f64,
    /// First time the smallest eigenvalue drops below `-psd_tol·‖S‖`.
    pub first_violation_time: Option<f64>,
    pub violations: usize,
}

pub fn positivity_report(path: &PathRecord, psd_tol: f64) -> PositivityReport {
    let mut report = PositivityReport {
        min_eigenvalue: f64::INFINITY,
        first_violation_time: None,
        violations: 0,
    };
    for (t, s) in path.times.iter().zip(&path.states) {
        let ev = s.eigenvalues();
        let min = ev[0];
        let norm = ev.iter().fold(0.0_f64, |acc, l| acc.max(l.abs()));
        report.min_eigenvalue = report.min_eigenvalue.min(min);
        if min < -psd_tol * norm {
            report.violations += 1;
            report.first_violation_time.get_or_insert(*t);
        }
    }
    report
}
