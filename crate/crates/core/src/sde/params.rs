use crate::error::{Result, WishartError};
use crate::matrix::{rcond, GeneralMatrix, PsdMatrix, SymMatrix, SINGULAR_RCOND};

/// Parameters of the Wishart SDE
///
/// ```text
/// dS = √S dB Q + Qᵀ dBᵀ √S + (S K + Kᵀ S + α QᵀQ) dt,   S_0 = s0
/// ```
#[derive(Debug, Clone)]
pub struct WishartParams {
    pub q: GeneralMatrix,
    pub k: GeneralMatrix,
    pub alpha: f64,
    pub s0: PsdMatrix,
}

impl WishartParams {
    pub fn new(q: GeneralMatrix, k: GeneralMatrix, alpha: f64, s0: PsdMatrix) -> Result<Self> {
        let p = s0.dim();
        for (name, m) in [("Q", &q), ("K", &k)] {
            if m.nrows() != p || m.ncols() != p {
                return Err(WishartError::DimensionMismatch(format!(
                    "{name} is {}x{}, s0 is {p}x{p}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(WishartError::InvalidParameter(format!("{name} has non-finite entries")));
            }
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(WishartError::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
        }
        Ok(WishartParams { q, k, alpha, s0 })
    }

    pub fn dim(&self) -> usize {
        self.s0.dim()
    }

    /// `α QᵀQ`, the constant part of the drift.
    pub fn drift_fix(&self) -> GeneralMatrix {
        (self.q.transpose() * &self.q) * self.alpha
    }

    pub fn qtq(&self) -> SymMatrix {
        SymMatrix::symmetrize(&(self.q.transpose() * &self.q))
    }

    /// `α ≥ p+1` and `Q` numerically invertible: the regime where a unique
    /// strong solution staying in the open cone is known to exist.
    pub fn existence_certified(&self) -> bool {
        self.alpha >= (self.dim() + 1) as f64 && rcond(&self.q) >= SINGULAR_RCOND
    }

    /// The CIR parameters of a one-dimensional process with `k < 0`:
    /// `σ = 2q`, `a = -2k`, `b = -α q²/(2k)`.
    pub fn to_cir(&self) -> Result<CirParams> {
        if self.dim() != 1 {
            return Err(WishartError::DimensionMismatch("CIR form needs p = 1".into()));
        }
        let (q, k) = (self.q[(0, 0)], self.k[(0, 0)]);
        if !(k < 0.0) {
            return Err(WishartError::InvalidParameter("CIR form needs k < 0".into()));
        }
        CirParams::new(-2.0 * k, -self.alpha * q * q / (2.0 * k), 2.0 * q.abs(), self.s0.get(0, 0))
    }
}

/// `dr = σ √r dW + a (b - r) dt`,  `r_0 = r0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub r0: f64,
}

impl CirParams {
    pub fn new(a: f64, b: f64, sigma: f64, r0: f64) -> Result<Self> {
        let ok = [a, b, sigma, r0].iter().all(|x| x.is_finite()) && a >= 0.0 && b >= 0.0 && sigma >= 0.0 && r0 >= 0.0;
        if !ok {
            return Err(WishartError::InvalidParameter(format!(
                "CIR needs finite a, b, sigma, r0 >= 0 (got a={a}, b={b}, sigma={sigma}, r0={r0})"
            )));
        }
        Ok(CirParams { a, b, sigma, r0 })
    }

    /// One-dimensional Wishart form: `q = σ/2`, `k = -a/2`, `α = 4ab/σ²`.
    pub fn to_wishart(&self) -> Result<WishartParams> {
        if !(self.sigma > 0.0) {
            return Err(WishartError::DegenerateDiffusion);
        }
        let one = |x: f64| GeneralMatrix::from_element(1, 1, x);
        WishartParams::new(
            one(self.sigma / 2.0),
            one(-self.a / 2.0),
            4.0 * self.a * self.b / (self.sigma * self.sigma),
            PsdMatrix::new(SymMatrix::from_diagonal(&[self.r0]))?,
        )
    }

    /// Mean `b + (r0 - b) e^{-a t}`.
    pub fn mean(&self, t: f64) -> f64 {
        self.b + (self.r0 - self.b) * (-self.a * t).exp()
    }
}

/// Matrix Ornstein-Uhlenbeck process `dX = X B dt + dW A` on `n×p` matrices.
#[derive(Debug, Clone)]
pub struct OuParams {
    pub n: usize,
    pub a: GeneralMatrix,
    pub b: GeneralMatrix,
    pub x0: GeneralMatrix,
}

impl OuParams {
    pub fn new(n: usize, a: GeneralMatrix, b: GeneralMatrix, x0: GeneralMatrix) -> Result<Self> {
        let p = a.nrows();
        if !a.is_square() || b.nrows() != p || b.ncols() != p {
            return Err(WishartError::DimensionMismatch(format!(
                "A is {}x{}, B is {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        if x0.nrows() != n || x0.ncols() != p {
            return Err(WishartError::DimensionMismatch(format!(
                "x0 is {}x{}, expected {n}x{p}",
                x0.nrows(),
                x0.ncols()
            )));
        }
        Ok(OuParams { n, a, b, x0 })
    }

    /// Initial point `x0 = [I_p; 0]` (so that `x0ᵀx0 = I`), requires `n ≥ p`.
    pub fn with_identity_start(n: usize, a: GeneralMatrix, b: GeneralMatrix) -> Result<Self> {
        let p = a.nrows();
        if n < p {
            return Err(WishartError::BadDof { dof: n as f64, dim: p });
        }
        let x0 = GeneralMatrix::from_fn(n, p, |i, j| if i == j { 1.0 } else { 0.0 });
        Self::new(n, a, b, x0)
    }

    /// An `x0` with `x0ᵀ x0 = s0`: the PSD root of `s0` stacked on zero rows.
    pub fn with_start_state(n: usize, a: GeneralMatrix, b: GeneralMatrix, s0: &PsdMatrix) -> Result<Self> {
        let p = s0.dim();
        if n < p {
            return Err(WishartError::BadDof { dof: n as f64, dim: p });
        }
        let root = crate::matrix::sqrt_psd(s0)?;
        let mut x0 = GeneralMatrix::zeros(n, p);
        x0.view_mut((0, 0), (p, p)).copy_from(root.as_matrix());
        Self::new(n, a, b, x0)
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn ata(&self) -> SymMatrix {
        SymMatrix::symmetrize(&(self.a.transpose() * &self.a))
    }

    pub fn s0(&self) -> PsdMatrix {
        PsdMatrix::gram(&self.x0)
    }

    /// Wishart parameters of `XᵀX`: `Q = √(AᵀA)`, `K = B`, `α = n`.
    pub fn square_wishart_params(&self) -> Result<WishartParams> {
        let q = crate::matrix::sqrt_psd(&self.ata())?.into_sym().into_inner();
        WishartParams::new(q, self.b.clone(), self.n as f64, self.s0())
    }
}
