use proptest::prelude::*;

use wishart::distribution::{conditional_wishart_params, stationary_wishart_params, wishart_cf, wishart_laplace};
use wishart::matrix::{trace_product, GeneralMatrix, PsdMatrix, SymMatrix};
use wishart::mc::{par_paths, McSummary};
use wishart::samplers::{NoncentralWishartSampler, WishartLawParams};
use wishart::sde::{
    sample_square_ou_terminal, simulate_besq, simulate_square_ou, simulate_wishart_adaptive, OuParams, OuTransition,
    WishartParams,
};
use wishart::validation::empirical_laplace;
use wishart::RngStream;

fn psd(rows: &[Vec<f64>]) -> PsdMatrix {
    PsdMatrix::new(SymMatrix::from_rows(rows).unwrap()).unwrap()
}

fn within(est: &McSummary, exact: f64, z: f64) -> bool {
    (est.estimate - exact).abs() <= z * est.std_error.unwrap()
}

#[test]
fn noncentral_sampler_matches_laplace_transform() {
    let sigma = psd(&[vec![1.0, 0.3, 0.0], vec![0.3, 0.8, 0.1], vec![0.0, 0.1, 0.5]]);
    // Θ = Σ⁻¹ M Mᵀ keeps ΣΘ symmetric PSD
    let mmt = GeneralMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 0.5, 0.1, 0.0, 0.1, 0.3]);
    let theta = sigma.as_matrix().clone().try_inverse().unwrap() * mmt;
    let law = WishartLawParams::new(5.0, sigma, theta).unwrap();
    let sampler = NoncentralWishartSampler::new(&law).unwrap();
    let draws = par_paths(&RngStream::new(2, 0), 20_000, |_, rng| Ok(sampler.sample(rng).into_sym())).unwrap();
    for u in [
        PsdMatrix::new(SymMatrix::identity(3).scale(0.05)).unwrap(),
        psd(&[vec![0.2, 0.05, 0.0], vec![0.05, 0.1, 0.0], vec![0.0, 0.0, 0.3]]),
    ] {
        let est = empirical_laplace(&draws, &u).unwrap();
        let exact = wishart_laplace(&u, &law);
        assert!(within(&est, exact, 3.0), "{} vs {exact}", est.estimate);
    }
}

#[test]
fn characteristic_function_matches_sample() {
    let sigma = psd(&[vec![0.6, 0.1], vec![0.1, 0.4]]);
    let mmt = GeneralMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
    let theta = sigma.as_matrix().clone().try_inverse().unwrap() * mmt;
    let law = WishartLawParams::new(4.0, sigma, theta).unwrap();
    let sampler = NoncentralWishartSampler::new(&law).unwrap();
    let draws = par_paths(&RngStream::new(8, 0), 20_000, |_, rng| Ok(sampler.sample(rng).into_sym())).unwrap();
    let z = SymMatrix::from_rows(&[vec![0.4, -0.2], vec![-0.2, 0.7]]).unwrap();
    let phase: Vec<f64> = draws.iter().map(|s| trace_product(z.as_matrix(), s.as_matrix())).collect();
    let re = McSummary::from_samples(&phase.iter().map(|x| x.cos()).collect::<Vec<_>>()).unwrap();
    let im = McSummary::from_samples(&phase.iter().map(|x| x.sin()).collect::<Vec<_>>()).unwrap();
    let exact = wishart_cf(&z, &law);
    assert!(within(&re, exact.re, 3.0), "re {} vs {}", re.estimate, exact.re);
    assert!(within(&im, exact.im, 3.0), "im {} vs {}", im.estimate, exact.im);
}

#[test]
fn square_ou_matches_conditional_law_nonsymmetric_drift() {
    let a = GeneralMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.0, 0.7]);
    let b = GeneralMatrix::from_row_slice(2, 2, &[-0.8, 0.5, -0.3, -1.2]);
    let s0 = psd(&[vec![1.5, -0.4], vec![-0.4, 0.6]]);
    let ou = OuParams::with_start_state(4, a, b, &s0).unwrap();
    let t = 0.7;
    let law = conditional_wishart_params(&ou, &s0, t).unwrap().to_law().unwrap();
    let kernel = OuTransition::new(&ou, t).unwrap();
    let draws =
        par_paths(&RngStream::new(13, 0), 20_000, |_, rng| Ok(sample_square_ou_terminal(&kernel, &ou, rng).into_sym()))
            .unwrap();
    let u = psd(&[vec![0.15, 0.05], vec![0.05, 0.25]]);
    let est = empirical_laplace(&draws, &u).unwrap();
    let exact = wishart_laplace(&u, &law);
    assert!(within(&est, exact, 3.0), "{:?} vs {exact}", est);

    // the multi-step path reaches the same law as the one-step kernel
    let grid: Vec<f64> = (0..=7).map(|i| i as f64 * 0.1).collect();
    let terminal = par_paths(&RngStream::new(14, 0), 20_000, |_, rng| {
        Ok(simulate_square_ou(&ou, &grid, rng)?.terminal().clone())
    })
    .unwrap();
    let est = empirical_laplace(&terminal, &u).unwrap();
    assert!(within(&est, wishart_laplace(&u, &law), 3.0));
}

#[test]
fn long_run_square_ou_matches_stationary_law() {
    let ou = OuParams::with_identity_start(
        3,
        GeneralMatrix::from_row_slice(2, 2, &[0.8, 0.0, 0.3, 1.0]),
        GeneralMatrix::from_row_slice(2, 2, &[-1.0, 0.2, 0.0, -1.5]),
    )
    .unwrap();
    let law = stationary_wishart_params(&ou).unwrap();
    let kernel = OuTransition::new(&ou, 30.0).unwrap();
    let draws =
        par_paths(&RngStream::new(15, 0), 20_000, |_, rng| Ok(sample_square_ou_terminal(&kernel, &ou, rng).into_sym()))
            .unwrap();
    let u = psd(&[vec![0.3, 0.1], vec![0.1, 0.2]]);
    let est = empirical_laplace(&draws, &u).unwrap();
    assert!(within(&est, wishart_laplace(&u, &law), 3.0));
}

#[test]
fn euler_and_exact_square_ou_agree_in_law() {
    let a = GeneralMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.8]);
    let b = GeneralMatrix::from_row_slice(2, 2, &[-1.0, 0.3, 0.0, -0.7]);
    let ou = OuParams::with_identity_start(4, a, b).unwrap();
    let wishart = ou.square_wishart_params().unwrap();
    let law = conditional_wishart_params(&ou, &PsdMatrix::identity(2), 0.5).unwrap().to_law().unwrap();
    let terminal = par_paths(&RngStream::new(16, 0), 10_000, |_, rng| {
        Ok(simulate_wishart_adaptive(&wishart, 0.5, 1e-3, rng)?.terminal().clone())
    })
    .unwrap();
    let u = psd(&[vec![0.2, 0.0], vec![0.0, 0.2]]);
    let est = empirical_laplace(&terminal, &u).unwrap();
    let exact = wishart_laplace(&u, &law);
    let se = est.std_error.unwrap();
    assert!((est.estimate - exact).abs() <= (3.0 * se).max(1e-2), "{} vs {exact}", est.estimate);
}

#[test]
fn scalar_wishart_with_unit_q_is_besq() {
    let alpha = 1.3;
    let params = WishartParams::new(
        GeneralMatrix::from_element(1, 1, 1.0),
        GeneralMatrix::from_element(1, 1, 0.0),
        alpha,
        psd(&[vec![0.2]]),
    )
    .unwrap();
    for seed in 0..10 {
        let a = simulate_besq(alpha, 0.2, 1.0, 1e-2, &mut RngStream::new(seed, 0)).unwrap();
        let b = simulate_wishart_adaptive(&params, 1.0, 1e-2, &mut RngStream::new(seed, 0)).unwrap();
        assert_eq!(a.times, b.times);
        assert_eq!(a.scalar_values(), b.scalar_values());
    }
}

fn psd_strategy(p: usize) -> impl Strategy<Value = PsdMatrix> {
    prop::collection::vec(-1.0f64..1.0, p * p).prop_map(move |v| PsdMatrix::gram(&GeneralMatrix::from_vec(p, p, v)))
}

proptest! {
    #[test]
    fn laplace_is_a_probability_weight(u in psd_strategy(2), s in psd_strategy(2), n in 2.0f64..8.0) {
        let law = WishartLawParams::new(n, PsdMatrix::new(s.add(&SymMatrix::identity(2).scale(0.1))).unwrap(), GeneralMatrix::zeros(2, 2)).unwrap();
        let v = wishart_laplace(&u, &law);
        prop_assert!(v > 0.0 && v <= 1.0 + 1e-15, "{v}");
        // monotone: larger U gives a smaller transform
        let bigger = PsdMatrix::new(u.add(&SymMatrix::identity(2).scale(0.05))).unwrap();
        prop_assert!(wishart_laplace(&bigger, &law) <= v);
    }

    #[test]
    fn cf_modulus_is_bounded(z in prop::collection::vec(-3.0f64..3.0, 4), n in 2.0f64..8.0) {
        let z = SymMatrix::symmetrize(&GeneralMatrix::from_vec(2, 2, z));
        let law = WishartLawParams::new(n, psd(&[vec![1.0, 0.2], vec![0.2, 0.5]]), GeneralMatrix::identity(2, 2)).unwrap();
        prop_assert!(wishart_cf(&z, &law).norm() <= 1.0 + 1e-12);
    }
}
