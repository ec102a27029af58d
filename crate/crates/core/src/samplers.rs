//! Matrix normal and noncentral Wishart variates, Brownian increments and
//! Brownian-bridge midpoint refinement.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WishartError};
use crate::matrix::{sqrt_psd, GeneralMatrix, PsdMatrix, SymMatrix, SYMMETRY_TOL};
use crate::rng::RngStream;

/// Law `N_{p,n}(M, Σ ⊗ Ψ)`: `vec(Xᵀ)` has mean `vec(Mᵀ)` and covariance `Σ ⊗ Ψ`.
#[derive(Debug, Clone)]
pub struct MatrixNormalParams {
    pub mean: GeneralMatrix,
    pub row_cov: PsdMatrix,
    pub col_cov: PsdMatrix,
}

impl MatrixNormalParams {
    pub fn new(mean: GeneralMatrix, row_cov: PsdMatrix, col_cov: PsdMatrix) -> Result<Self> {
        if row_cov.dim() != mean.nrows() || col_cov.dim() != mean.ncols() {
            return Err(WishartError::DimensionMismatch(format!(
                "mean is {}x{}, row covariance {}, column covariance {}",
                mean.nrows(),
                mean.ncols(),
                row_cov.dim(),
                col_cov.dim()
            )));
        }
        Ok(MatrixNormalParams {
            mean,
            row_cov,
            col_cov,
        })
    }
}

/// Matrix normal sampler with the covariance square roots precomputed.
/// Draws are `M + √Σ Z √Ψ` with `Z` iid standard normal.
#[derive(Debug, Clone)]
pub struct MatrixNormalSampler {
    mean: GeneralMatrix,
    row_root: GeneralMatrix,
    col_root: GeneralMatrix,
}

impl MatrixNormalSampler {
    pub fn new(params: &MatrixNormalParams) -> Result<Self> {
        Ok(MatrixNormalSampler {
            mean: params.mean.clone(),
            row_root: sqrt_psd(&params.row_cov)?.into_sym().into_inner(),
            col_root: sqrt_psd(&params.col_cov)?.into_sym().into_inner(),
        })
    }

    pub fn sample(&self, rng: &mut RngStream) -> GeneralMatrix {
        let z = rng.standard_normal_matrix(self.mean.nrows(), self.mean.ncols());
        &self.mean + &self.row_root * z * &self.col_root
    }
}

pub fn sample_matrix_normal(params: &MatrixNormalParams, rng: &mut RngStream) -> Result<GeneralMatrix> {
    Ok(MatrixNormalSampler::new(params)?.sample(rng))
}

/// Noncentral Wishart law `W_p(n, Σ, Θ)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WishartLawParams {
    /// Degrees of freedom.
    pub n: f64,
    pub sigma: PsdMatrix,
    #[serde(with = "crate::serde_matrix")]
    pub theta: GeneralMatrix,
}

impl WishartLawParams {
    pub fn new(n: f64, sigma: PsdMatrix, theta: GeneralMatrix) -> Result<Self> {
        let p = sigma.dim();
        if theta.nrows() != p || theta.ncols() != p {
            return Err(WishartError::DimensionMismatch(format!(
                "Θ is {}x{}, Σ is {p}x{p}",
                theta.nrows(),
                theta.ncols()
            )));
        }
        if !(n.is_finite() && n > 0.0) {
            return Err(WishartError::BadDof { dof: n, dim: p });
        }
        Ok(WishartLawParams { n, sigma, theta })
    }

    /// Central law `W_p(n, Σ, 0)`.
    pub fn central(n: f64, sigma: PsdMatrix) -> Result<Self> {
        let p = sigma.dim();
        Self::new(n, sigma, GeneralMatrix::zeros(p, p))
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    /// `ΣΘ`, which equals `MMᵀ` for the square construction; checked for
    /// symmetry at relative tolerance 1e-10, then symmetrised.
    pub fn sigma_theta(&self) -> Result<SymMatrix> {
        let st = self.sigma.as_matrix() * &self.theta;
        let scale = st.amax().max(1.0);
        let asym = (&st - st.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(WishartError::NotSymmetric { asymmetry: asym });
        }
        Ok(SymMatrix::symmetrize(&st))
    }
}

/// Draws `XXᵀ` with `X ~ N_{p,n}(M, Σ ⊗ I_n)` and `M = [√(ΣΘ) | 0]`.
#[derive(Debug, Clone)]
pub struct NoncentralWishartSampler {
    n: usize,
    sigma_root: GeneralMatrix,
    mean: GeneralMatrix,
}

impl NoncentralWishartSampler {
    pub fn new(params: &WishartLawParams) -> Result<Self> {
        let p = params.dim();
        let n = params.n;
        if n.fract() != 0.0 || n < p as f64 {
            return Err(WishartError::BadDof { dof: n, dim: p });
        }
        let n = n as usize;
        let root_st = sqrt_psd(&params.sigma_theta()?)?;
        let mut mean = GeneralMatrix::zeros(p, n);
        mean.view_mut((0, 0), (p, p)).copy_from(root_st.as_matrix());
        Ok(NoncentralWishartSampler {
            n,
            sigma_root: sqrt_psd(&params.sigma)?.into_sym().into_inner(),
            mean,
        })
    }

    pub fn sample(&self, rng: &mut RngStream) -> PsdMatrix {
        let p = self.mean.nrows();
        let z = rng.standard_normal_matrix(p, self.n);
        let x = &self.mean + &self.sigma_root * z;
        PsdMatrix::new_unchecked(SymMatrix::symmetrize(&(&x * x.transpose())))
    }
}

pub fn sample_noncentral_wishart(params: &WishartLawParams, rng: &mut RngStream) -> Result<PsdMatrix> {
    Ok(NoncentralWishartSampler::new(params)?.sample(rng))
}

/// `p×p` matrix of iid `N(0, h)` entries.
pub fn bm_increment(p: usize, h: f64, rng: &mut RngStream) -> Result<GeneralMatrix> {
    if !(h > 0.0) {
        return Err(WishartError::NonPositiveStep(h));
    }
    Ok(rng.standard_normal_matrix(p, p) * h.sqrt())
}

/// Increment over the first half of `[t, t+h]` given the full increment `y`:
/// `y/2 + (√h/2) Z`.
pub fn bridge_refine(y: &GeneralMatrix, h: f64, rng: &mut RngStream) -> Result<GeneralMatrix> {
    if !(h > 0.0) {
        return Err(WishartError::NonPositiveStep(h));
    }
    let z = rng.standard_normal_matrix(y.nrows(), y.ncols());
    Ok(y * 0.5 + z * (h.sqrt() * 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn mean_and_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn degenerate_covariance_returns_mean() {
        let mean = GeneralMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 3.0, 0.0, 7.0]);
        let params =
            MatrixNormalParams::new(mean.clone(), PsdMatrix::zeros(2), PsdMatrix::identity(3)).unwrap();
        let mut rng = RngStream::new(1, 0);
        assert_eq!(sample_matrix_normal(&params, &mut rng).unwrap(), mean);
        let params =
            MatrixNormalParams::new(mean.clone(), PsdMatrix::identity(2), PsdMatrix::zeros(3)).unwrap();
        assert_eq!(sample_matrix_normal(&params, &mut rng).unwrap(), mean);
    }

    #[test]
    fn standard_matrix_normal_mean_is_zero() {
        let n = 100_000;
        let params =
            MatrixNormalParams::new(GeneralMatrix::zeros(2, 2), PsdMatrix::identity(2), PsdMatrix::identity(2))
                .unwrap();
        let sampler = MatrixNormalSampler::new(&params).unwrap();
        let mut rng = RngStream::new(11, 0);
        let draws: Vec<GeneralMatrix> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        for idx in 0..4 {
            let xs: Vec<f64> = draws.iter().map(|d| d[idx]).collect();
            let (m, v) = mean_and_var(&xs);
            assert!(m.abs() <= 4.0 * (v / n as f64).sqrt(), "entry {idx} mean {m}");
        }
    }

    #[test]
    fn matrix_normal_covariance_is_kronecker_product() {
        let n = 100_000;
        let sigma = PsdMatrix::new(SymMatrix::from_rows(&[vec![2.0, 0.6], vec![0.6, 1.0]]).unwrap()).unwrap();
        let psi = PsdMatrix::new(SymMatrix::from_rows(&[vec![1.0, -0.4], vec![-0.4, 0.5]]).unwrap()).unwrap();
        let expected = sigma.as_matrix().kronecker(psi.as_matrix());
        let params = MatrixNormalParams::new(GeneralMatrix::zeros(2, 2), sigma, psi).unwrap();
        let sampler = MatrixNormalSampler::new(&params).unwrap();
        let mut rng = RngStream::new(12, 0);
        let mut cov = GeneralMatrix::zeros(4, 4);
        for _ in 0..n {
            let x = sampler.sample(&mut rng);
            let v = GeneralMatrix::from_column_slice(4, 1, x.transpose().as_slice());
            cov += &v * v.transpose();
        }
        cov /= n as f64;
        for i in 0..4 {
            for j in 0..4 {
                let e = expected[(i, j)];
                // 5% of the entry, with an absolute floor for the small entries
                let tol = 0.05 * e.abs().max(0.5);
                assert!((cov[(i, j)] - e).abs() <= tol, "({i},{j}): {} vs {e}", cov[(i, j)]);
            }
        }
    }

    #[test]
    fn central_wishart_mean() {
        let p = 3;
        let params = WishartLawParams::central(p as f64, PsdMatrix::identity(p)).unwrap();
        let sampler = NoncentralWishartSampler::new(&params).unwrap();
        let mut rng = RngStream::new(3, 0);
        let mut acc = GeneralMatrix::zeros(p, p);
        let draws = 10_000;
        for _ in 0..draws {
            let s = sampler.sample(&mut rng);
            assert!(crate::matrix::min_eigenvalue(&s) >= -1e-12 * s.spectral_norm().max(1.0));
            acc += s.as_matrix();
        }
        acc /= draws as f64;
        for i in 0..p {
            for j in 0..p {
                let e = if i == j { p as f64 } else { 0.0 };
                assert!((acc[(i, j)] - e).abs() <= 0.05 * p as f64, "({i},{j}) {}", acc[(i, j)]);
            }
        }
    }

    #[test]
    fn noncentral_wishart_mean() {
        let sigma = PsdMatrix::new(SymMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 0.5]]).unwrap()).unwrap();
        let mmt = SymMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let theta = sigma.as_matrix().clone().try_inverse().unwrap() * mmt.as_matrix();
        let params = WishartLawParams::new(4.0, sigma.clone(), theta).unwrap();
        let expected = sigma.as_matrix() * 4.0 + mmt.as_matrix();
        let sampler = NoncentralWishartSampler::new(&params).unwrap();
        let mut rng = RngStream::new(4, 0);
        let draws = 10_000;
        let mut acc = GeneralMatrix::zeros(2, 2);
        for _ in 0..draws {
            acc += sampler.sample(&mut rng).as_matrix();
        }
        acc /= draws as f64;
        for i in 0..2 {
            for j in 0..2 {
                let e = expected[(i, j)];
                assert!((acc[(i, j)] - e).abs() <= 0.05 * e.abs(), "({i},{j}) {} vs {e}", acc[(i, j)]);
            }
        }
    }

    #[test]
    fn bad_dof_rejected() {
        let sigma = PsdMatrix::identity(3);
        let params = WishartLawParams::central(2.0, sigma.clone()).unwrap();
        assert!(matches!(NoncentralWishartSampler::new(&params), Err(WishartError::BadDof { .. })));
        let params = WishartLawParams::central(3.5, sigma).unwrap();
        assert!(matches!(NoncentralWishartSampler::new(&params), Err(WishartError::BadDof { .. })));
    }

    #[test]
    fn non_psd_sigma_theta_rejected() {
        let sigma = PsdMatrix::identity(2);
        let theta = GeneralMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let params = WishartLawParams::new(3.0, sigma, theta).unwrap();
        assert!(matches!(NoncentralWishartSampler::new(&params), Err(WishartError::NotPsd { .. })));
    }

    #[test]
    fn bm_increment_variance_and_independence() {
        let h = 0.3;
        let n = 100_000;
        let mut rng = RngStream::new(5, 0);
        let draws: Vec<GeneralMatrix> = (0..n).map(|_| bm_increment(2, h, &mut rng).unwrap()).collect();
        for idx in 0..4 {
            let xs: Vec<f64> = draws.iter().map(|d| d[idx]).collect();
            let (_, v) = mean_and_var(&xs);
            assert!((v - h).abs() <= 0.05 * h, "entry {idx} variance {v}");
        }
        for a in 0..4 {
            for b in (a + 1)..4 {
                let prods: Vec<f64> = draws.iter().map(|d| d[a] * d[b]).collect();
                let (m, v) = mean_and_var(&prods);
                assert!(m.abs() <= 4.0 * (v / n as f64).sqrt(), "entries {a},{b} cross-cov {m}");
            }
        }
    }

    #[test]
    fn bm_increment_passes_ks() {
        let h = 0.7;
        let n = 10_000;
        let mut rng = RngStream::new(6, 0);
        let mut xs: Vec<f64> = (0..n).map(|_| bm_increment(1, h, &mut rng).unwrap()[0]).collect();
        xs.sort_by(|a, b| a.total_cmp(b));
        let law = Normal::new(0.0, h.sqrt()).unwrap();
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = law.cdf(x);
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        // asymptotic 1% critical value
        assert!(d < 1.628 / (n as f64).sqrt(), "KS statistic {d}");
    }

    #[test]
    fn bm_increment_reproducible_and_rejects_bad_step() {
        let a = bm_increment(3, 1.0, &mut RngStream::new(9, 4)).unwrap();
        let b = bm_increment(3, 1.0, &mut RngStream::new(9, 4)).unwrap();
        assert_eq!(a, b);
        assert!(matches!(bm_increment(2, 0.0, &mut RngStream::new(9, 4)), Err(WishartError::NonPositiveStep(_))));
        assert!(matches!(
            bridge_refine(&a, -1.0, &mut RngStream::new(9, 4)),
            Err(WishartError::NonPositiveStep(_))
        ));
    }

    #[test]
    fn bridge_with_zero_endpoint() {
        let h = 0.2;
        let n = 100_000;
        let y = GeneralMatrix::zeros(2, 2);
        let mut rng = RngStream::new(7, 0);
        let draws: Vec<GeneralMatrix> = (0..n).map(|_| bridge_refine(&y, h, &mut rng).unwrap()).collect();
        for idx in 0..4 {
            let xs: Vec<f64> = draws.iter().map(|d| d[idx]).collect();
            let (m, v) = mean_and_var(&xs);
            assert!(m.abs() <= 4.0 * (v / n as f64).sqrt());
            assert!((v - h / 4.0).abs() <= 0.02 * h / 4.0, "variance {v}");
        }
    }

    #[test]
    fn bridge_marginal_variance_is_half_step() {
        let h = 0.5;
        let n = 100_000;
        let mut rng = RngStream::new(8, 0);
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                let y = bm_increment(1, h, &mut rng).unwrap();
                bridge_refine(&y, h, &mut rng).unwrap()[0]
            })
            .collect();
        let (_, v) = mean_and_var(&xs);
        assert!((v - h / 2.0).abs() <= 0.02 * h / 2.0, "variance {v}");
    }
}
