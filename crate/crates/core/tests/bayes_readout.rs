use bwl::bayes::fit_posterior_from_gram;
use bwl::{fit_least_squares, fit_posterior, NoiseModel, RngSeed};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian_matrix(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Textbook posterior through an explicit LU inverse of the precision.
fn brute_force(phi: &DMatrix<f64>, y: &DMatrix<f64>, noise: NoiseModel) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = phi.ncols();
    let s2 = noise.sigma * noise.sigma;
    let precision = DMatrix::<f64>::identity(k, k) * noise.alpha + phi.transpose() * phi / s2;
    let cov = precision.lu().try_inverse().unwrap();
    let mean = &cov * phi.transpose() * y / s2;
    (mean, cov)
}

#[test]
fn least_squares_zeroes_the_gradient() {
    let mut rng = RngSeed(11).rng();
    for ridge in [0.0, 1e-3, 2.0] {
        let phi = gaussian_matrix(&mut rng, 40, 6);
        let y = gaussian_matrix(&mut rng, 40, 2);
        let a = fit_least_squares(&phi, &y, ridge).unwrap();
        let grad = phi.transpose() * (&phi * &a - &y) + &a * ridge;
        assert!(grad.amax() < 1e-10, "ridge {ridge}: {}", grad.amax());
    }
}

#[test]
fn posterior_mean_equals_ridge_solution() {
    let mut rng = RngSeed(3).rng();
    for case in 0..50 {
        let phi = gaussian_matrix(&mut rng, 200, 20);
        let y = gaussian_matrix(&mut rng, 200, 1);
        let noise = NoiseModel::new(rng.random_range(0.05..2.0), rng.random_range(0.01..10.0)).unwrap();
        let post = fit_posterior(&phi, &y, noise).unwrap();
        let ridge = fit_least_squares(&phi, &y, noise.alpha * noise.sigma * noise.sigma).unwrap();
        let diff = (post.mean() - &ridge).norm();
        assert!(diff <= 1e-8 * post.mean().norm(), "case {case}: {diff}");
    }
}

#[test]
fn posterior_matches_explicit_inverse() {
    let mut rng = RngSeed(21).rng();
    for k in 1..=5 {
        for m in 1..=8 {
            let phi = gaussian_matrix(&mut rng, m, k);
            let y = gaussian_matrix(&mut rng, m, 2);
            let noise = NoiseModel::new(rng.random_range(0.1..1.5), rng.random_range(0.1..3.0)).unwrap();
            let post = fit_posterior(&phi, &y, noise).unwrap();
            let (mean, cov) = brute_force(&phi, &y, noise);
            assert!((post.mean() - &mean).amax() < 1e-10);
            assert!((post.covariance() - &cov).amax() < 1e-10);
            for _ in 0..5 {
                let probe = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
                let pred = post.predict(&probe).unwrap();
                let expected_mean = mean.transpose() * &probe;
                let expected_var = (probe.transpose() * &cov * &probe)[0];
                assert!((pred.mean - expected_mean).amax() < 1e-10);
                assert!((pred.variance - expected_var).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn gram_path_agrees_with_direct_fit() {
    let mut rng = RngSeed(4).rng();
    let phi = gaussian_matrix(&mut rng, 30, 7);
    let y = gaussian_matrix(&mut rng, 30, 3);
    let noise = NoiseModel::new(0.3, 2.0).unwrap();
    let a = fit_posterior(&phi, &y, noise).unwrap();
    let b = fit_posterior_from_gram(phi.transpose() * &phi, phi.transpose() * &y, noise).unwrap();
    assert!((a.mean() - b.mean()).amax() < 1e-13);
}

#[test]
fn covariance_is_symmetric_positive_definite() {
    let mut rng = RngSeed(9).rng();
    let phi = gaussian_matrix(&mut rng, 25, 10);
    let y = gaussian_matrix(&mut rng, 25, 1);
    let cov = fit_posterior(&phi, &y, NoiseModel::new(0.2, 0.5).unwrap()).unwrap().covariance();
    assert!((&cov - cov.transpose()).amax() < 1e-12);
    let eig = cov.symmetric_eigen();
    assert!(eig.eigenvalues.iter().all(|&e| e > 0.0));
    // bounded above by the prior covariance I/α
    assert!(eig.eigenvalues.max() <= 1.0 / 0.5 + 1e-12);
}

#[test]
fn more_data_never_increases_latent_variance() {
    let mut rng = RngSeed(17).rng();
    let noise = NoiseModel::new(0.4, 1.0).unwrap();
    let mut phi = gaussian_matrix(&mut rng, 5, 8);
    let probes = gaussian_matrix(&mut rng, 50, 8);
    for _ in 0..20 {
        let y = DMatrix::zeros(phi.nrows(), 1);
        let before = fit_posterior(&phi, &y, noise).unwrap();
        let cov = before.covariance();
        let x = DVector::from_fn(8, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut grown = phi.clone().insert_row(phi.nrows(), 0.0);
        grown.row_mut(phi.nrows()).copy_from(&x.transpose());
        let after = fit_posterior(&grown, &DMatrix::zeros(grown.nrows(), 1), noise).unwrap();
        let (_, var_before) = before.predict_batch(&probes).unwrap();
        let (_, var_after) = after.predict_batch(&probes).unwrap();
        // Sherman–Morrison: Σ' = Σ − Σx xᵀΣ / (σ² + xᵀΣx)
        let sx = &cov * &x;
        let denom = noise.sigma * noise.sigma + x.dot(&sx);
        for j in 0..probes.nrows() {
            let p = probes.row(j).transpose();
            let oracle = var_before[j] - p.dot(&sx).powi(2) / denom;
            assert!(var_after[j] <= var_before[j] + 1e-12);
            assert!((var_after[j] - oracle).abs() < 1e-9 * var_before[j].max(1.0));
        }
        phi = grown;
    }
}

#[test]
fn stronger_prior_shrinks_variance() {
    let mut rng = RngSeed(23).rng();
    let phi = gaussian_matrix(&mut rng, 12, 9);
    let y = gaussian_matrix(&mut rng, 12, 1);
    let probes = gaussian_matrix(&mut rng, 30, 9);
    let mut last: Option<DVector<f64>> = None;
    for alpha in [0.1, 0.2, 0.4, 0.8, 1.6, 3.2] {
        let post = fit_posterior(&phi, &y, NoiseModel::new(0.5, alpha).unwrap()).unwrap();
        let (_, var) = post.predict_batch(&probes).unwrap();
        for j in 0..probes.nrows() {
            let bound = probes.row(j).norm_squared() / alpha;
            assert!(var[j] <= bound * (1.0 + 1e-12));
        }
        if let Some(prev) = &last {
            assert!(var.iter().zip(prev.iter()).all(|(a, b)| *a <= *b + 1e-12));
        }
        last = Some(var);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn latent_variance_is_between_zero_and_prior(
        seed in any::<u64>(),
        m in 1usize..15,
        k in 1usize..6,
        sigma in 0.05..3.0f64,
        alpha in 0.05..5.0f64,
    ) {
        let mut rng = RngSeed(seed).rng();
        let phi = gaussian_matrix(&mut rng, m, k);
        let y = gaussian_matrix(&mut rng, m, 1);
        let post = fit_posterior(&phi, &y, NoiseModel::new(sigma, alpha).unwrap()).unwrap();
        let probe = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let v = post.predict(&probe).unwrap().variance;
        prop_assert!(v >= 0.0);
        prop_assert!(v <= probe.norm_squared() / alpha * (1.0 + 1e-10));
    }
}
