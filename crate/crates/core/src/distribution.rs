//! Closed-form laws: conditional and stationary noncentral Wishart
//! parameters of the square-OU process, Laplace transform and
//! characteristic function of `W_p(n, Σ, Θ)`, the CIR transition law and
//! the deterministic mean-reversion level of the Wishart drift.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WishartError};
use crate::matrix::{
    drift_operator_solve, expm, lyapunov_solve, max_real_eigenvalue, rcond, sqrt_psd, GeneralMatrix, PsdMatrix,
    SymMatrix, SINGULAR_RCOND,
};
use crate::samplers::WishartLawParams;
use crate::sde::{ou_transition_covariance, CirParams, OuParams, WishartParams};

/// Law of `S_t | s0` for the square-OU process: `W_p(n, Σ_t, Θ_t)`.
#[derive(Debug, Clone)]
pub struct TransitionParams {
    pub sigma_t: PsdMatrix,
    pub theta_t: GeneralMatrix,
    pub dof: f64,
}

impl TransitionParams {
    pub fn to_law(&self) -> Result<WishartLawParams> {
        WishartLawParams::new(self.dof, self.sigma_t.clone(), self.theta_t.clone())
    }
}

/// `Σ_t = A_B⁻¹(AᵀA) - A_B⁻¹(e^{Bᵀt} AᵀA e^{Bt})` and `Θ_t = Σ_t⁻¹ e^{Bᵀt} s0 e^{Bt}`.
pub fn conditional_wishart_params(ou: &OuParams, s0: &PsdMatrix, t: f64) -> Result<TransitionParams> {
    if s0.dim() != ou.dim() {
        return Err(WishartError::DimensionMismatch(format!(
            "s0 is {0}x{0}, process dimension is {1}",
            s0.dim(),
            ou.dim()
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(WishartError::InvalidParameter(format!("t must be >= 0, got {t}")));
    }
    let sigma = ou_transition_covariance(ou, t)?;
    let rc = rcond(sigma.as_matrix());
    if !(rc >= SINGULAR_RCOND) {
        return Err(WishartError::SingularSigma { rcond: rc });
    }
    let sigma_t = PsdMatrix::new(sigma)?;
    let location = s0.congruence(&expm(&ou.b, t));
    let theta_t = sigma_t
        .as_matrix()
        .clone()
        .lu()
        .solve(location.as_matrix())
        .ok_or(WishartError::SingularSigma { rcond: rc })?;
    Ok(TransitionParams {
        sigma_t,
        theta_t,
        dof: ou.n as f64,
    })
}

/// Stationary law `W_p(n, A_B⁻¹(AᵀA), 0)`; requires `Re σ(B) < 0`.
pub fn stationary_wishart_params(ou: &OuParams) -> Result<WishartLawParams> {
    let max_re = max_real_eigenvalue(&ou.b);
    if !(max_re < 0.0) {
        return Err(WishartError::UnstableDrift { max_real_part: max_re });
    }
    let sigma = PsdMatrix::new(lyapunov_solve(&ou.b, &ou.ata())?)?;
    WishartLawParams::central(ou.n as f64, sigma)
}

/// `E[etr(-U S)] = det(I + 2ΣU)^{-n/2} etr[-ΣΘ (I + 2UΣ)⁻¹ U]`.
///
/// The determinant power is evaluated through the log-determinant of an LU
/// factorisation so large `n` cannot overflow.
pub fn wishart_laplace(u: &PsdMatrix, law: &WishartLawParams) -> f64 {
    let p = law.dim();
    assert_eq!(u.dim(), p, "test matrix dimension mismatch");
    let us = u.as_matrix() * law.sigma.as_matrix();
    let m = GeneralMatrix::identity(p, p) + &us * 2.0;
    let lu = m.lu();
    let parity: f64 = lu.p().determinant();
    let (log_abs_det, sign) = lu_log_det(lu.u().diagonal().iter().copied());
    if sign * parity <= 0.0 {
        return f64::NAN;
    }
    let inner = lu.solve(u.as_matrix()).expect("I + 2UΣ is invertible for PSD Σ, U");
    let tr = crate::matrix::trace_product(&(law.sigma.as_matrix() * &law.theta), &inner);
    (-0.5 * law.n * log_abs_det - tr).exp()
}

fn lu_log_det(diag: impl Iterator<Item = f64>) -> (f64, f64) {
    diag.fold((0.0, 1.0), |(acc, sign), d| (acc + d.abs().ln(), sign * d.signum()))
}

/// `E[etr(i Z S)] = det(I - 2iΣZ)^{-n/2} etr[i ΣΘ (I - 2iZΣ)⁻¹ Z]`.
///
/// The determinant power is taken factor by factor over the real eigenvalues
/// `λ` of `Σ^{1/2} Z Σ^{1/2}`, each `(1 - 2iλ)^{-n/2}` on the principal
/// branch, which is the continuous branch starting from 1 at `Z = 0`.
pub fn wishart_cf(z: &SymMatrix, law: &WishartLawParams) -> Complex64 {
    let p = law.dim();
    assert_eq!(z.dim(), p, "argument dimension mismatch");
    let root = sqrt_psd(&law.sigma).expect("Σ is PSD");
    let inner = z.congruence(root.as_matrix());
    let det_part = inner
        .eigenvalues()
        .into_iter()
        .map(|lambda| Complex64::new(1.0, -2.0 * lambda).powf(-0.5 * law.n))
        .fold(Complex64::new(1.0, 0.0), |acc, f| acc * f);

    let to_c = |m: &GeneralMatrix| DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| Complex64::new(m[(i, j)], 0.0));
    let zs = to_c(&(z.as_matrix() * law.sigma.as_matrix()));
    let lhs = DMatrix::<Complex64>::identity(p, p) - &zs * Complex64::new(0.0, 2.0);
    let solved = lhs.lu().solve(&to_c(z.as_matrix())).expect("I - 2iZΣ is invertible for real symmetric Z");
    let tr = (to_c(&(law.sigma.as_matrix() * &law.theta)) * solved).trace();
    det_part * (Complex64::new(0.0, 1.0) * tr).exp()
}

/// `r_t | r_0` is `scale × χ'²(dof, noncentrality)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirTransition {
    pub scale: f64,
    pub dof: f64,
    pub noncentrality: f64,
}

impl CirTransition {
    /// `scale · (dof + noncentrality)`.
    pub fn mean(&self) -> f64 {
        self.scale * (self.dof + self.noncentrality)
    }

    /// `scale² · 2(dof + 2·noncentrality)`.
    pub fn variance(&self) -> f64 {
        self.scale * self.scale * 2.0 * (self.dof + 2.0 * self.noncentrality)
    }
}

pub fn cir_transition_params(cir: &CirParams, t: f64) -> Result<CirTransition> {
    if !(cir.sigma > 0.0) {
        return Err(WishartError::DegenerateDiffusion);
    }
    if !(t > 0.0) {
        return Err(WishartError::InvalidParameter(format!("t must be > 0, got {t}")));
    }
    if !(cir.a > 0.0) {
        return Err(WishartError::InvalidParameter("mean reversion speed a must be > 0".into()));
    }
    let (a, b, s2) = (cir.a, cir.b, cir.sigma * cir.sigma);
    let decay = (-a * t).exp();
    let one_minus = -(-a * t).exp_m1();
    Ok(CirTransition {
        scale: s2 * one_minus / (4.0 * a),
        dof: 4.0 * a * b / s2,
        noncentrality: 4.0 * a * decay / (s2 * one_minus) * cir.r0,
    })
}

/// Attractor `-C_K⁻¹(α QᵀQ)` of the deterministic drift flow.
pub fn mean_reversion_target(params: &WishartParams) -> Result<SymMatrix> {
    let m = SymMatrix::symmetrize(&params.drift_fix());
    Ok(drift_operator_solve(&params.k, &m)?.scale(-1.0))
}

/// Solution of `dS/dt = S K + Kᵀ S + α QᵀQ` from `s0`:
/// `e^{Kᵀt} (s0 - S∞) e^{Kt} + S∞` with `S∞` the mean-reversion target.
pub fn deterministic_flow(params: &WishartParams, t: f64) -> Result<SymMatrix> {
    let target = mean_reversion_target(params)?;
    let gap = params.s0.sub(&target);
    Ok(gap.congruence(&expm(&params.k, t)).add(&target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(x: f64) -> GeneralMatrix {
        GeneralMatrix::from_element(1, 1, x)
    }

    #[test]
    fn conditional_params_scalar_lyapunov() {
        let b = 0.7;
        let t = 1.3;
        let ou = OuParams::with_identity_start(3, GeneralMatrix::identity(2, 2), GeneralMatrix::identity(2, 2) * -b).unwrap();
        let tp = conditional_wishart_params(&ou, &PsdMatrix::identity(2), t).unwrap();
        let expected = (1.0 - (-2.0 * b * t).exp()) / (2.0 * b);
        assert_relative_eq!(tp.sigma_t.as_matrix(), &(GeneralMatrix::identity(2, 2) * expected), epsilon = 1e-14);
        // Θ_t = Σ_t⁻¹ e^{-2bt}
        let theta = (-2.0 * b * t).exp() / expected;
        assert_relative_eq!(tp.theta_t, GeneralMatrix::identity(2, 2) * theta, epsilon = 1e-13);
        assert_eq!(tp.dof, 3.0);
    }

    #[test]
    fn conditional_params_limit_and_zero_time() {
        let b = GeneralMatrix::from_row_slice(2, 2, &[-1.0, 0.3, -0.2, -0.6]);
        let a = GeneralMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 0.8]);
        let ou = OuParams::with_identity_start(3, a, b.clone()).unwrap();
        let stat = stationary_wishart_params(&ou).unwrap();
        let horizon = 50.0 / max_real_eigenvalue(&b).abs();
        let late = conditional_wishart_params(&ou, &PsdMatrix::identity(2), horizon).unwrap();
        assert_relative_eq!(late.sigma_t.as_matrix(), stat.sigma.as_matrix(), epsilon = 1e-8);
        assert!(late.theta_t.amax() < 1e-8);
        assert!(matches!(
            conditional_wishart_params(&ou, &PsdMatrix::identity(2), 0.0),
            Err(WishartError::SingularSigma { .. })
        ));
    }

    #[test]
    fn conditional_params_sigma_theta_is_psd() {
        let b = GeneralMatrix::from_row_slice(2, 2, &[-1.0, 0.3, -0.2, -0.6]);
        let ou = OuParams::with_identity_start(4, GeneralMatrix::identity(2, 2), b).unwrap();
        let s0 = PsdMatrix::new(SymMatrix::from_rows(&[vec![2.0, 0.4], vec![0.4, 0.5]]).unwrap()).unwrap();
        let tp = conditional_wishart_params(&ou, &s0, 0.8).unwrap();
        let law = tp.to_law().unwrap();
        let st = law.sigma_theta().unwrap();
        assert!(crate::matrix::min_eigenvalue(&st) > 0.0);
    }

    #[test]
    fn laplace_special_values() {
        let law = WishartLawParams::new(
            3.0,
            PsdMatrix::new(SymMatrix::from_rows(&[vec![1.0, 0.2], vec![0.2, 0.6]]).unwrap()).unwrap(),
            GeneralMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.4]),
        )
        .unwrap();
        assert_eq!(wishart_laplace(&PsdMatrix::zeros(2), &law), 1.0);

        // p = 1, Θ = 0: (1 + 2σ²u)^{-n/2}
        let (s2, u, n) = (0.7, 0.3, 5.0);
        let law1 = WishartLawParams::central(n, PsdMatrix::new(SymMatrix::from_diagonal(&[s2])).unwrap()).unwrap();
        let value = wishart_laplace(&PsdMatrix::new(SymMatrix::from_diagonal(&[u])).unwrap(), &law1);
        assert_relative_eq!(value, (1.0 + 2.0 * s2 * u).powf(-n / 2.0), epsilon = 1e-15);
    }

    #[test]
    fn laplace_large_dof_does_not_overflow() {
        let law = WishartLawParams::central(5_000.0, PsdMatrix::identity(3)).unwrap();
        let u = PsdMatrix::new(SymMatrix::from_diagonal(&[1e-4, 2e-4, 3e-4])).unwrap();
        let value = wishart_laplace(&u, &law);
        let expected = [1e-4, 2e-4, 3e-4].iter().map(|x: &f64| (-2500.0 * (1.0 + 2.0 * x).ln()).exp()).product::<f64>();
        assert_relative_eq!(value, expected, max_relative = 1e-12);
    }

    #[test]
    fn laplace_monotone_along_rays() {
        let law = WishartLawParams::new(
            4.0,
            PsdMatrix::identity(2),
            GeneralMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]),
        )
        .unwrap();
        let u = SymMatrix::from_rows(&[vec![0.2, 0.1], vec![0.1, 0.3]]).unwrap();
        let mut prev = 1.0;
        for c in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let v = wishart_laplace(&PsdMatrix::new(u.scale(c)).unwrap(), &law);
            assert!(v < prev && v > 0.0);
            prev = v;
        }
    }

    #[test]
    fn cf_at_zero_and_modulus_bound() {
        let law = WishartLawParams::new(
            3.5,
            PsdMatrix::new(SymMatrix::from_rows(&[vec![1.0, 0.2], vec![0.2, 0.6]]).unwrap()).unwrap(),
            GeneralMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.4]),
        )
        .unwrap();
        let one = wishart_cf(&SymMatrix::zeros(2), &law);
        assert_relative_eq!(one.re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(one.im, 0.0, epsilon = 1e-15);
        assert_eq!(wishart_laplace(&PsdMatrix::zeros(2), &law), one.re);

        let mut rng = crate::rng::RngStream::new(42, 0);
        for _ in 0..100 {
            let g = rng.standard_normal_matrix(2, 2) * 2.0;
            let z = SymMatrix::symmetrize(&g);
            assert!(wishart_cf(&z, &law).norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn cf_scalar_central_matches_chi_square() {
        // p = 1, Σ = 1, Θ = 0: the χ²_n characteristic function (1 - 2iz)^{-n/2}
        let law = WishartLawParams::central(3.0, PsdMatrix::identity(1)).unwrap();
        let z = 0.4;
        let value = wishart_cf(&SymMatrix::from_diagonal(&[z]), &law);
        let expected = Complex64::new(1.0, -2.0 * z).powf(-1.5);
        assert_relative_eq!(value.re, expected.re, epsilon = 1e-14);
        assert_relative_eq!(value.im, expected.im, epsilon = 1e-14);
    }

    #[test]
    fn stationary_params_cases() {
        let (b, sigma) = (1.5, 0.8);
        let ou = OuParams::with_identity_start(3, GeneralMatrix::identity(2, 2) * sigma, GeneralMatrix::identity(2, 2) * -b).unwrap();
        let law = stationary_wishart_params(&ou).unwrap();
        assert_relative_eq!(law.sigma.as_matrix(), &(GeneralMatrix::identity(2, 2) * (sigma * sigma / (2.0 * b))), epsilon = 1e-14);
        assert_eq!(law.theta, GeneralMatrix::zeros(2, 2));
        assert_eq!(law.n, 3.0);

        // B symmetric negative definite commuting with AᵀA: Σ = -AᵀA B⁻¹ / 2
        let bm = GeneralMatrix::from_row_slice(2, 2, &[-2.0, 0.5, 0.5, -1.0]);
        let a = crate::matrix::sqrt_psd(&SymMatrix::symmetrize(&(&bm * &bm + GeneralMatrix::identity(2, 2))))
            .unwrap()
            .into_sym()
            .into_inner();
        let ou = OuParams::with_identity_start(3, a, bm.clone()).unwrap();
        let law = stationary_wishart_params(&ou).unwrap();
        let expected = -0.5 * ou.ata().as_matrix() * bm.try_inverse().unwrap();
        assert_relative_eq!(law.sigma.as_matrix(), &expected, epsilon = 1e-12);

        let zero_eig = GeneralMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, -1.0]));
        let ou = OuParams::with_identity_start(3, GeneralMatrix::identity(2, 2), zero_eig).unwrap();
        assert!(matches!(stationary_wishart_params(&ou), Err(WishartError::UnstableDrift { .. })));
    }

    #[test]
    fn cir_transition_cases() {
        let cir = CirParams::new(1.0, 1.0, 2.0, 0.5).unwrap();
        let tr = cir_transition_params(&cir, 1.0).unwrap();
        assert_relative_eq!(tr.dof, 1.0, epsilon = 1e-15);

        let far = cir_transition_params(&cir, 60.0).unwrap();
        assert!(far.noncentrality < 1e-20);

        let cir = CirParams::new(1.0, 0.05, 0.1, 0.08).unwrap();
        for t in [0.1, 1.0, 3.0] {
            let tr = cir_transition_params(&cir, t).unwrap();
            assert_relative_eq!(tr.mean(), cir.mean(t), epsilon = 1e-14);
        }
        let flat = CirParams::new(1.0, 0.05, 0.0, 0.08).unwrap();
        assert!(matches!(cir_transition_params(&flat, 1.0), Err(WishartError::DegenerateDiffusion)));
    }

    #[test]
    fn mean_reversion_target_cases() {
        let k = 1.7;
        let q = GeneralMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, -3.0]);
        let params = WishartParams::new(q.clone(), GeneralMatrix::identity(2, 2) * -k, 3.0, PsdMatrix::identity(2)).unwrap();
        let target = mean_reversion_target(&params).unwrap();
        assert_relative_eq!(target.as_matrix(), &(q.transpose() * &q * (3.0 / (2.0 * k))), epsilon = 1e-12);

        // p = 1 matches the CIR level b = -α q² / (2k)
        let params = WishartParams::new(scalar(0.4), scalar(-0.9), 2.5, PsdMatrix::identity(1)).unwrap();
        let target = mean_reversion_target(&params).unwrap();
        assert_relative_eq!(target.get(0, 0), params.to_cir().unwrap().b, epsilon = 1e-15);

        let params = WishartParams::new(q, GeneralMatrix::zeros(2, 2), 3.0, PsdMatrix::identity(2)).unwrap();
        assert!(matches!(mean_reversion_target(&params), Err(WishartError::SingularOperator { .. })));
    }

    #[test]
    fn mean_reversion_target_residual() {
        let k = GeneralMatrix::from_row_slice(3, 3, &[-1.0, 0.3, 0.0, 0.2, -2.0, 0.4, 0.0, -0.5, -1.5]);
        let q = GeneralMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.1, 0.0, 0.8, -0.3, 0.4, 0.0, 1.2]);
        let params = WishartParams::new(q, k.clone(), 4.0, PsdMatrix::identity(3)).unwrap();
        let target = mean_reversion_target(&params).unwrap();
        let residual = crate::matrix::drift_operator_apply(&k, &target).as_matrix() + params.drift_fix();
        assert!(residual.norm() < 1e-10);
    }

    #[test]
    fn deterministic_flow_solves_ode() {
        let k = GeneralMatrix::from_row_slice(2, 2, &[-1.0, 0.4, -0.3, -2.0]);
        let q = GeneralMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 1.0]);
        let params = WishartParams::new(q, k.clone(), 3.0, PsdMatrix::identity(2)).unwrap();
        assert_relative_eq!(deterministic_flow(&params, 0.0).unwrap().as_matrix(), &GeneralMatrix::identity(2, 2), epsilon = 1e-14);
        // central finite difference of the flow against the drift
        let (t, eps) = (0.6, 1e-5);
        let d = (deterministic_flow(&params, t + eps).unwrap().as_matrix()
            - deterministic_flow(&params, t - eps).unwrap().as_matrix())
            / (2.0 * eps);
        let s = deterministic_flow(&params, t).unwrap();
        let rhs = crate::matrix::drift_operator_apply(&k, &s).as_matrix() + params.drift_fix();
        assert_relative_eq!(d, rhs, epsilon = 1e-7);
    }
}
