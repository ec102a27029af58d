//! Zero-coupon bond pricing: closed-form CIR bonds and Monte Carlo prices in
//! the Wishart factor model `r = c + tr(C S)`, `λ_i = d_i + tr(D_i S)`.

use crate::error::{Result, WishartError};
use crate::matrix::{trace_product, PsdMatrix, SymMatrix};
use crate::mc::{par_summary, McSummary};
use crate::rng::RngStream;
use crate::sde::{simulate_wishart_adaptive, CirParams, WishartParams};

/// Default-intensity loadings `λ = d + tr(D S)` of one issuer.
#[derive(Debug, Clone)]
pub struct Issuer {
    pub d: f64,
    pub loading: PsdMatrix,
}

#[derive(Debug, Clone)]
pub struct FactorModel {
    pub c: f64,
    pub loading: PsdMatrix,
    pub issuers: Vec<Issuer>,
    pub wishart: WishartParams,
}

impl FactorModel {
    pub fn new(c: f64, loading: PsdMatrix, issuers: Vec<Issuer>, wishart: WishartParams) -> Result<Self> {
        let p = wishart.dim();
        if !(c.is_finite() && c >= 0.0) {
            return Err(WishartError::InvalidParameter(format!("c must be >= 0, got {c}")));
        }
        if loading.dim() != p {
            return Err(WishartError::DimensionMismatch(format!("C is {0}x{0}, factor is {p}x{p}", loading.dim())));
        }
        for (i, iss) in issuers.iter().enumerate() {
            if !(iss.d.is_finite() && iss.d >= 0.0) {
                return Err(WishartError::InvalidParameter(format!("issuer {i}: d must be >= 0, got {}", iss.d)));
            }
            if iss.loading.dim() != p {
                return Err(WishartError::DimensionMismatch(format!(
                    "issuer {i}: D is {0}x{0}, factor is {p}x{p}",
                    iss.loading.dim()
                )));
            }
        }
        Ok(FactorModel {
            c,
            loading,
            issuers,
            wishart,
        })
    }

    /// One-factor model whose short rate is the CIR process itself:
    /// `c = 0`, `C = 1` and the `p = 1` Wishart form of `cir`.
    pub fn cir_replica(cir: &CirParams) -> Result<Self> {
        Self::new(0.0, PsdMatrix::identity(1), Vec::new(), cir.to_wishart()?)
    }

    /// `(c + d_i, C + D_i)`, with issuer `None` meaning risk-free.
    fn discount_loadings(&self, issuer: Option<usize>) -> Result<(f64, SymMatrix)> {
        match issuer {
            None => Ok((self.c, self.loading.as_sym().clone())),
            Some(i) => {
                let iss = self.issuers.get(i).ok_or(WishartError::IndexOutOfRange {
                    index: i,
                    bound: self.issuers.len(),
                })?;
                Ok((self.c + iss.d, self.loading.add(&iss.loading)))
            }
        }
    }
}

/// `c + tr(C S)`, plus `d_i + tr(D_i S)` when an issuer is given.
pub fn factor_short_rate(model: &FactorModel, s: &PsdMatrix, issuer: Option<usize>) -> Result<f64> {
    let (level, loading) = model.discount_loadings(issuer)?;
    if s.dim() != loading.dim() {
        return Err(WishartError::DimensionMismatch(format!("S is {0}x{0}, model is {1}x{1}", s.dim(), loading.dim())));
    }
    Ok(level + trace_product(loading.as_matrix(), s.as_matrix()))
}

/// Monte Carlo price of `E[exp(-∫_0^h (r + λ_i) dτ)]`.
///
/// Each path is an adaptive Euler run with initial step `h0`; `∫S dτ` is the
/// trapezoid rule on that path's mesh. With a zero loading no path is
/// simulated and the estimate is exactly `e^{-(c+d_i)h}`.
pub fn bond_price_mc(
    model: &FactorModel,
    issuer: Option<usize>,
    h: f64,
    n_paths: usize,
    h0: f64,
    rng: &RngStream,
) -> Result<McSummary> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(WishartError::InvalidParameter(format!("maturity must be > 0, got {h}")));
    }
    if n_paths == 0 {
        return Err(WishartError::EmptySample);
    }
    let (level, loading) = model.discount_loadings(issuer)?;
    let base = (-level * h).exp();
    if loading.as_matrix().iter().all(|&x| x == 0.0) {
        return McSummary::from_samples(&vec![base; n_paths]);
    }
    par_summary(rng, n_paths, |_, stream| {
        let path = simulate_wishart_adaptive(&model.wishart, h, h0, stream)?;
        let integral = path.integral();
        Ok((-level * h - trace_product(loading.as_matrix(), integral.as_matrix())).exp())
    })
}

/// `(f(h), g(h))` with `B(t, t+h) = exp(-f(h) r - g(h))`.
///
/// Evaluated in an algebraically equivalent form built on `exp_m1`/`ln_1p`,
/// which is exact at `h = 0` and stays accurate as `σ → 0`.
pub fn cir_bond_exponents(cir: &CirParams, h: f64) -> (f64, f64) {
    let (a, b, s2) = (cir.a, cir.b, cir.sigma * cir.sigma);
    let c = (a * a + 2.0 * s2).sqrt();
    let decay = (-c * h).exp();
    let one_minus = -(-c * h).exp_m1();
    let f = 2.0 * one_minus / ((c + a) + (c - a) * decay);
    let w = one_minus / (c * (c + a));
    let log_term = if s2 == 0.0 { -w } else { (-s2 * w).ln_1p() / s2 };
    let g = 2.0 * a * b * h / (c + a) + 2.0 * a * b * log_term;
    (f, g)
}

/// Zero-coupon bond price under CIR dynamics of the short rate `r`.
pub fn cir_bond_closed_form(cir: &CirParams, r: f64, h: f64) -> f64 {
    let (f, g) = cir_bond_exponents(cir, h);
    (-f * r - g).exp()
}
