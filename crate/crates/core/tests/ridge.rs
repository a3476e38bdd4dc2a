use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, Axis};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use triplet_embed::interp::*;

fn gaussian(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((n, d), || rng.sample(StandardNormal))
}

/// Explicit inverse of the penalized, centered normal equations.
fn inverse_oracle(x: &Array2<f64>, y: &Array1<f64>, lambda: f64) -> (Vec<f64>, f64) {
    let (n, d) = x.dim();
    let xm = x.mean_axis(Axis(0)).unwrap();
    let ym = y.mean().unwrap();
    let xc = DMatrix::from_fn(n, d, |i, j| x[[i, j]] - xm[j]);
    let yc = DVector::from_fn(n, |i, _| y[i] - ym);
    let a = xc.transpose() * &xc + DMatrix::identity(d, d) * lambda;
    let w = a.try_inverse().unwrap() * xc.transpose() * yc;
    let b = ym - (0..d).map(|j| xm[j] * w[j]).sum::<f64>();
    (w.iter().copied().collect(), b)
}

#[test]
fn matches_dense_inverse() {
    for (seed, lambda) in [(1, 0.0), (2, 0.1), (3, 10.0)] {
        let x = gaussian(50, 10, seed);
        let y = gaussian(50, 1, seed + 100).column(0).to_owned();
        let fit = fit_ridge(x.view(), y.view(), lambda).unwrap();
        let (w, b) = inverse_oracle(&x, &y, lambda);
        for (a, o) in fit.weights.iter().zip(&w) {
            assert!((a - o).abs() < 1e-10);
        }
        assert!((fit.intercept - b).abs() < 1e-10);
    }
}

#[test]
fn noiseless_interpolation() {
    let x = gaussian(40, 6, 4);
    let w_true = Array1::from(vec![1.0, -2.0, 0.5, 0.0, 3.0, -1.0]);
    let y = x.dot(&w_true) + 0.7;
    let fit = fit_ridge(x.view(), y.view(), 0.0).unwrap();
    for (a, b) in fit.weights.iter().zip(&w_true) {
        assert!((a - b).abs() < 1e-9);
    }
    assert!((fit.intercept - 0.7).abs() < 1e-9);
    let resid = (&fit.predict(x.view()) - &y).mapv(f64::abs).fold(0.0, |a: f64, &b| a.max(b));
    assert!(resid < 1e-9);
    assert!(r2_score(y.view(), fit.predict(x.view()).view()).unwrap() > 1.0 - 1e-12);
}

#[test]
fn infinite_shrinkage() {
    let x = gaussian(30, 5, 5);
    let y = gaussian(30, 1, 6).column(0).to_owned();
    let fit = fit_ridge(x.view(), y.view(), 1e12).unwrap();
    assert!(fit.weights.iter().all(|w| w.abs() < 1e-6));
    let mean = y.mean().unwrap();
    assert!(fit.predict(x.view()).iter().all(|p| (p - mean).abs() < 1e-5));
}

#[test]
fn orthonormal_design() {
    // Centered orthonormal columns from a QR of centered Gaussian data.
    let raw = gaussian(20, 4, 7);
    let mean = raw.mean_axis(Axis(0)).unwrap();
    let c = &raw - &mean;
    let q = DMatrix::from_fn(20, 4, |i, j| c[[i, j]]).qr().q();
    let x = Array2::from_shape_fn((20, 4), |(i, j)| q[(i, j)]);
    let y = gaussian(20, 1, 8).column(0).to_owned();
    let fit = fit_ridge(x.view(), y.view(), 0.0).unwrap();
    let yc = &y - y.mean().unwrap();
    let want = x.t().dot(&yc);
    for (a, b) in fit.weights.iter().zip(&want) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn cv_picks_interior_lambda_on_noisy_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (n, d) = (60, 40);
    let x = gaussian(n, d, 10);
    let w_true = Array1::from_shape_simple_fn(d, || 0.3 * rng.sample::<f64, _>(StandardNormal));
    let noise = Array1::from_shape_simple_fn(n, || 1.5 * rng.sample::<f64, _>(StandardNormal));
    let y = (x.dot(&w_true) + noise).insert_axis(Axis(1));
    let models = fit_ridge_cv(x.view(), y.view(), &[0], &RidgeCvConfig::default()).unwrap();
    let grid = &models.meta.lambda_grid;
    let chosen = grid.iter().position(|&l| l == models.meta.lambdas[0]).unwrap();
    assert!(chosen > 0 && chosen < grid.len() - 1, "chose {}", grid[chosen]);
    let curve = &models.meta.cv_mse[0];
    assert!(curve[chosen] < curve[0] && curve[chosen] < curve[grid.len() - 1]);
}

#[test]
fn cv_noiseless_recovery_and_round_trip() {
    let x = gaussian(80, 6, 11);
    let w = gaussian(6, 3, 12);
    let y = x.dot(&w).mapv(|v| v + 5.0);
    let models = fit_ridge_cv(x.view(), y.view(), &[4, 9, 1], &RidgeCvConfig::default()).unwrap();
    for c in 0..3 {
        assert!(models.meta.r2_heldout[c].unwrap() >= 0.99);
        assert!(models.meta.r2_in_sample[c].unwrap() >= 0.99);
    }
    let row = x.row(0);
    let pred = models.predict_raw(row).unwrap();
    for c in 0..3 {
        assert!((pred[c] - y[[0, c]]).abs() < 0.05);
    }
    let dir = tempfile::tempdir().unwrap();
    models.save(dir.path()).unwrap();
    let back = RidgeModelSet::load(dir.path()).unwrap();
    assert_eq!(back.meta, models.meta);
    for (a, b) in back.weights.iter().zip(models.weights.iter()) {
        assert_eq!(*a, *b as f32 as f64);
    }
    let bytes = std::fs::read(dir.path().join(WEIGHTS_FILE)).unwrap();
    assert_eq!(bytes.len(), 6 * 3 * 4);
    assert_eq!(f32::from_le_bytes(bytes[4..8].try_into().unwrap()), models.weights[[0, 1]] as f32);
}

#[test]
fn prediction_is_rectified() {
    let x = gaussian(30, 2, 13);
    let y = x.column(0).mapv(|v| v - 10.0).insert_axis(Axis(1));
    let models = fit_ridge_cv(x.view(), y.view(), &[0], &RidgeCvConfig::default()).unwrap();
    let p = models.predict(ndarray::array![0.0, 0.0].view()).unwrap();
    assert_eq!(p[0], 0.0);
    assert!(models.predict_raw(ndarray::array![0.0, 0.0].view()).unwrap()[0] < 0.0);
    assert!(models.predict(ndarray::array![0.0].view()).is_err());
}

#[test]
fn zero_weight_model_returns_intercept() {
    let mut models = fit_ridge_cv(
        gaussian(20, 3, 14).view(),
        gaussian(20, 2, 15).view(),
        &[0, 1],
        &RidgeCvConfig::default(),
    )
    .unwrap();
    models.weights.fill(0.0);
    models.meta.intercepts = vec![0.4, -0.2];
    for x in [ndarray::array![1.0, 2.0, 3.0], ndarray::array![-5.0, 0.0, 9.0]] {
        let p = predict_dimensions(&models, x.view()).unwrap();
        assert_eq!(p.to_vec(), vec![0.4, 0.0]);
    }
}

#[test]
fn load_rejects_truncated_weights() {
    let models = fit_ridge_cv(
        gaussian(20, 3, 16).view(),
        gaussian(20, 1, 17).view(),
        &[0],
        &RidgeCvConfig::default(),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    models.save(dir.path()).unwrap();
    std::fs::write(dir.path().join(WEIGHTS_FILE), [0u8; 8]).unwrap();
    assert!(RidgeModelSet::load(dir.path()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sample_order_does_not_matter(seed in 0u64..1000, lambda in 0.0f64..5.0) {
        let x = gaussian(25, 4, seed);
        let y = gaussian(25, 1, seed + 1).column(0).to_owned();
        let mut order: Vec<usize> = (0..25).collect();
        order.reverse();
        order.swap(3, 17);
        let a = fit_ridge(x.view(), y.view(), lambda).unwrap();
        let b = fit_ridge(x.select(Axis(0), &order).view(), y.select(Axis(0), &order).view(), lambda).unwrap();
        for (u, v) in a.weights.iter().zip(&b.weights) {
            prop_assert!((u - v).abs() < 1e-10);
        }
        prop_assert!((a.intercept - b.intercept).abs() < 1e-10);
    }
}
