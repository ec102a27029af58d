//! Dense symmetric-matrix arithmetic on the positive-semidefinite cone.
//!
//! States of the Wishart process live in the closed cone of symmetric
//! positive-semidefinite matrices. This module provides the storage types
//! ([`SymMatrix`], [`PsdMatrix`]) and the handful of matrix functions the
//! distribution theory needs: the eigendecomposition square root, the matrix
//! exponential, and the inverse of the Lyapunov-type operators
//!
//! ```text
//! A_B : X -> -Bᵀ X - X B        (Ornstein-Uhlenbeck convention)
//! C_K : X -> X K + Kᵀ X         (Wishart drift convention)
//! ```
//!
//! Both operators are inverted through the Kronecker identity
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`, which is direct and fast for the small
//! dimensions used here.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WishartError};

/// Any real matrix: drift and volatility parameters, Brownian increments,
/// Ornstein-Uhlenbeck states.
pub type GeneralMatrix = DMatrix<f64>;

/// Default relative tolerance of the PSD test.
pub const DEFAULT_PSD_TOL: f64 = 1e-12;

/// Reciprocal condition number below which a Kronecker system counts as singular.
pub const SINGULAR_RCOND: f64 = 1e-12;

/// Relative asymmetry accepted by [`SymMatrix::try_from_matrix`] before symmetrising.
pub const SYMMETRY_TOL: f64 = 1e-10;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// A real symmetric `p×p` matrix. Symmetry is exact: every constructor
/// writes `entries[i][j]` and `entries[j][i]` from the same value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix(GeneralMatrix);

impl SymMatrix {
    pub fn zeros(p: usize) -> Self {
        SymMatrix(GeneralMatrix::zeros(p, p))
    }

    pub fn identity(p: usize) -> Self {
        SymMatrix(GeneralMatrix::identity(p, p))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let p = diag.len();
        SymMatrix(GeneralMatrix::from_fn(p, p, |i, j| if i == j { diag[i] } else { 0.0 }))
    }

    /// Symmetric part `(M + Mᵀ)/2` of a square matrix.
    pub fn symmetrize(m: &GeneralMatrix) -> Self {
        assert!(m.is_square(), "symmetrize needs a square matrix");
        let p = m.nrows();
        SymMatrix(GeneralMatrix::from_fn(p, p, |i, j| (m[(i, j)] + m[(j, i)]) * 0.5))
    }

    /// Accepts `m` if its asymmetry is within [`SYMMETRY_TOL`] relative to its
    /// largest entry, then stores the symmetric part.
    pub fn try_from_matrix(m: GeneralMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(WishartError::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(WishartError::InvalidParameter("non-finite matrix entry".into()));
        }
        let scale = m.amax().max(1.0);
        let asym = (&m - m.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(WishartError::NotSymmetric { asymmetry: asym });
        }
        Ok(Self::symmetrize(&m))
    }

    /// Builds from nested rows, e.g. `[[2.0, 1.0], [1.0, 2.0]]`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::try_from_matrix(general_from_rows(rows)?)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &GeneralMatrix {
        &self.0
    }

    pub fn into_inner(self) -> GeneralMatrix {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        if self.dim() == 1 {
            return self.0[(0, 0)].abs();
        }
        self.eigenvalues().iter().fold(0.0_f64, |acc, l| acc.max(l.abs()))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 1 {
            return vec![self.0[(0, 0)]];
        }
        let mut ev: Vec<f64> = self.0.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// `Tᵀ S T`, symmetrised.
    pub fn congruence(&self, t: &GeneralMatrix) -> SymMatrix {
        SymMatrix::symmetrize(&(t.transpose() * &self.0 * t))
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix(&self.0 * c)
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &other.0)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        general_to_rows(&self.0)
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = WishartError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymMatrix::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(s: SymMatrix) -> Self {
        s.to_rows()
    }
}

/// A symmetric matrix whose smallest eigenvalue is at least
/// `-psd_tol · max(1, ‖S‖₂)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymMatrix", into = "SymMatrix")]
pub struct PsdMatrix(SymMatrix);

impl PsdMatrix {
    pub fn new(s: SymMatrix) -> Result<Self> {
        Self::with_tol(s, DEFAULT_PSD_TOL)
    }

    pub fn with_tol(s: SymMatrix, psd_tol: f64) -> Result<Self> {
        check_psd(&s, psd_tol)?;
        Ok(PsdMatrix(s))
    }

    pub fn identity(p: usize) -> Self {
        PsdMatrix(SymMatrix::identity(p))
    }

    pub fn zeros(p: usize) -> Self {
        PsdMatrix(SymMatrix::zeros(p))
    }

    /// `Gᵀ G`, which lies in the cone for every `G`.
    pub fn gram(g: &GeneralMatrix) -> Self {
        PsdMatrix(SymMatrix::symmetrize(&(g.transpose() * g)))
    }

    /// Skips the eigenvalue test; for values that are PSD by construction.
    pub(crate) fn new_unchecked(s: SymMatrix) -> Self {
        PsdMatrix(s)
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.0
    }

    pub fn into_sym(self) -> SymMatrix {
        self.0
    }
}

impl std::ops::Deref for PsdMatrix {
    type Target = SymMatrix;

    fn deref(&self) -> &SymMatrix {
        &self.0
    }
}

impl TryFrom<SymMatrix> for PsdMatrix {
    type Error = WishartError;

    fn try_from(s: SymMatrix) -> Result<Self> {
        PsdMatrix::new(s)
    }
}

impl From<PsdMatrix> for SymMatrix {
    fn from(p: PsdMatrix) -> Self {
        p.0
    }
}

/// Lower bound on the smallest eigenvalue for `s` to count as PSD.
pub fn psd_bound(s: &SymMatrix, psd_tol: f64) -> f64 {
    -psd_tol * s.spectral_norm().max(1.0)
}

/// True if the eigenvalue `min_eig` is acceptable for a matrix of spectral norm `norm`.
pub fn within_cone(min_eig: f64, norm: f64, psd_tol: f64) -> bool {
    min_eig >= -psd_tol * norm.max(1.0)
}

fn check_psd(s: &SymMatrix, psd_tol: f64) -> Result<()> {
    let ev = s.eigenvalues();
    let min = ev[0];
    let norm = ev.iter().fold(0.0_f64, |acc, l| acc.max(l.abs()));
    if within_cone(min, norm, psd_tol) {
        Ok(())
    } else {
        Err(WishartError::NotPsd {
            min_eigenvalue: min,
            bound: psd_tol * norm.max(1.0),
        })
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(s: &SymMatrix) -> f64 {
    s.eigenvalues()[0]
}

/// Square root `U diag(√λ) Uᵀ` of a PSD matrix. Eigenvalues in
/// `[-psd_tol·max(1,‖S‖), 0)` are clamped to zero.
pub fn sqrt_psd(s: &SymMatrix) -> Result<PsdMatrix> {
    sqrt_psd_with_tol(s, DEFAULT_PSD_TOL)
}

pub fn sqrt_psd_with_tol(s: &SymMatrix, psd_tol: f64) -> Result<PsdMatrix> {
    let p = s.dim();
    if p == 1 {
        let x = s.get(0, 0);
        if !within_cone(x, x.abs(), psd_tol) {
            return Err(WishartError::NotPsd {
                min_eigenvalue: x,
                bound: psd_tol * x.abs().max(1.0),
            });
        }
        return Ok(PsdMatrix(SymMatrix(GeneralMatrix::from_element(1, 1, x.max(0.0).sqrt()))));
    }
    let eig = s
        .as_matrix()
        .clone()
        .try_symmetric_eigen(EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| WishartError::InvalidParameter("eigendecomposition did not converge".into()))?;
    let min = eig.eigenvalues.min();
    let norm = eig.eigenvalues.amax();
    if !within_cone(min, norm, psd_tol) {
        return Err(WishartError::NotPsd {
            min_eigenvalue: min,
            bound: psd_tol * norm.max(1.0),
        });
    }
    let u = &eig.eigenvectors;
    let mut scaled = u.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let r = lambda.max(0.0).sqrt();
        scaled.column_mut(j).scale_mut(r);
    }
    Ok(PsdMatrix(SymMatrix::symmetrize(&(scaled * u.transpose()))))
}

/// `exp(B t)` by scaling and squaring with a Padé approximant; exactly the
/// identity for `t = 0`.
pub fn expm(b: &GeneralMatrix, t: f64) -> GeneralMatrix {
    assert!(b.is_square(), "expm needs a square matrix");
    if t == 0.0 {
        return GeneralMatrix::identity(b.nrows(), b.ncols());
    }
    (b * t).exp()
}

/// Applies `A_B : X -> -Bᵀ X - X B`.
pub fn lyapunov_apply(b: &GeneralMatrix, x: &SymMatrix) -> SymMatrix {
    let bx = b.transpose() * x.as_matrix();
    SymMatrix::symmetrize(&(-(&bx) - bx.transpose()))
}

/// Solves `-Bᵀ X - X B = M` for symmetric `X`.
pub fn lyapunov_solve(b: &GeneralMatrix, m: &SymMatrix) -> Result<SymMatrix> {
    let p = m.dim();
    if b.nrows() != p || b.ncols() != p {
        return Err(WishartError::DimensionMismatch(format!(
            "operator matrix is {}x{}, right-hand side is {p}x{p}",
            b.nrows(),
            b.ncols()
        )));
    }
    let system = lyapunov_system(b);
    let rc = rcond(&system);
    if !(rc >= SINGULAR_RCOND) {
        return Err(WishartError::SingularOperator { rcond: rc });
    }
    let rhs = vec(m.as_matrix());
    let sol = system
        .lu()
        .solve(&GeneralMatrix::from_column_slice(p * p, 1, &rhs))
        .ok_or(WishartError::SingularOperator { rcond: rc })?;
    Ok(SymMatrix::symmetrize(&vec_inv(sol.as_slice(), p, p)))
}

/// Applies `C_K : X -> X K + Kᵀ X`.
pub fn drift_operator_apply(k: &GeneralMatrix, x: &SymMatrix) -> SymMatrix {
    let xk = x.as_matrix() * k;
    SymMatrix::symmetrize(&(&xk + xk.transpose()))
}

/// Solves `X K + Kᵀ X = M`. Since `C_K = -A_K`, this is `A_K⁻¹(-M)`.
pub fn drift_operator_solve(k: &GeneralMatrix, m: &SymMatrix) -> Result<SymMatrix> {
    lyapunov_solve(k, &m.scale(-1.0))
}

/// The `p²×p²` matrix of `A_B` acting on `vec(X)`: `-(I ⊗ Bᵀ + Bᵀ ⊗ I)`.
fn lyapunov_system(b: &GeneralMatrix) -> GeneralMatrix {
    let p = b.nrows();
    let id = GeneralMatrix::identity(p, p);
    let bt = b.transpose();
    -(id.kronecker(&bt) + bt.kronecker(&id))
}

/// Reciprocal 2-norm condition number `σ_min/σ_max`; zero for the zero matrix.
pub fn rcond(m: &GeneralMatrix) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    if max == 0.0 || !max.is_finite() {
        return 0.0;
    }
    sv.min() / max
}

/// Largest real part over the (complex) spectrum of `b`.
pub fn max_real_eigenvalue(b: &GeneralMatrix) -> f64 {
    if b.nrows() == 1 {
        return b[(0, 0)];
    }
    b.complex_eigenvalues()
        .iter()
        .fold(f64::NEG_INFINITY, |acc, z| acc.max(z.re))
}

/// Column-stacking vectorisation.
pub fn vec(m: &GeneralMatrix) -> Vec<f64> {
    m.as_slice().to_vec()
}

/// Inverse of [`vec`].
pub fn vec_inv(v: &[f64], rows: usize, cols: usize) -> GeneralMatrix {
    assert_eq!(v.len(), rows * cols, "vec_inv length mismatch");
    GeneralMatrix::from_column_slice(rows, cols, v)
}

/// Half-vectorisation: the upper triangle including the diagonal, taken
/// column by column, `(S11, S12, S22, S13, S23, S33, ...)`.
pub fn vech(s: &SymMatrix) -> Vec<f64> {
    let p = s.dim();
    let mut out = Vec::with_capacity(p * (p + 1) / 2);
    for j in 0..p {
        for i in 0..=j {
            out.push(s.get(i, j));
        }
    }
    out
}

/// Inverse of [`vech`].
pub fn vech_inv(v: &[f64]) -> Result<SymMatrix> {
    let p = vech_dim(v.len()).ok_or_else(|| {
        WishartError::DimensionMismatch(format!("{} is not a triangular number", v.len()))
    })?;
    let mut m = GeneralMatrix::zeros(p, p);
    let mut idx = 0;
    for j in 0..p {
        for i in 0..=j {
            m[(i, j)] = v[idx];
            m[(j, i)] = v[idx];
            idx += 1;
        }
    }
    Ok(SymMatrix(m))
}

fn vech_dim(len: usize) -> Option<usize> {
    let mut p = 0;
    while p * (p + 1) / 2 < len {
        p += 1;
    }
    (p * (p + 1) / 2 == len && p > 0).then_some(p)
}

/// `exp(tr(M))`.
pub fn etr(m: &GeneralMatrix) -> f64 {
    m.trace().exp()
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &GeneralMatrix, b: &GeneralMatrix) -> f64 {
    assert_eq!(a.ncols(), b.nrows());
    assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn general_from_rows(rows: &[Vec<f64>]) -> Result<GeneralMatrix> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(WishartError::DimensionMismatch("empty matrix".into()));
    }
    let ncols = rows[0].len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(WishartError::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(GeneralMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn general_to_rows(m: &GeneralMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
