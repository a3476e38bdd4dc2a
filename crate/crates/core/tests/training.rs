use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use triplet_embed::synthetic::SparseTruth;
use triplet_embed::triplet_sim::{sample_triplet_dataset, TieRule};
use triplet_embed::vice::*;
use triplet_embed::{PointEmbedding, TripletRecord};

fn random_batch(m: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<TripletRecord> {
    (0..n)
        .map(|_| loop {
            let (a, b, c) = (rng.random_range(0..m), rng.random_range(0..m), rng.random_range(0..m));
            if let Ok(t) = TripletRecord::new(a, b, c) {
                break t;
            }
        })
        .collect()
}

/// Relative error of analytic gradients against central differences at fixed noise.
fn gradient_error(prior: &PriorConfig, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, p) = (6, 3);
    let mu = Array2::from_shape_simple_fn((m, p), || rng.random_range(-0.5..1.5));
    let ls = Array2::from_shape_simple_fn((m, p), || rng.random_range(-2.0..-0.5));
    let noise = vec![Array2::from_shape_simple_fn((m, p), || rng.sample(StandardNormal))];
    let batch = random_batch(m, 8, &mut rng);
    let n_total = 50;
    let params = VariationalEmbedding::new(mu.clone(), ls.clone(), *prior).unwrap();
    let terms = elbo_terms_with_noise(&batch, &params, prior, n_total, &noise);

    let loss_at = |mu: &Array2<f64>, ls: &Array2<f64>| {
        let v = VariationalEmbedding::new(mu.clone(), ls.clone(), *prior).unwrap();
        elbo_terms_with_noise(&batch, &v, prior, n_total, &noise).loss
    };
    let eps = 1e-6;
    let (mut diff, mut norm_a, mut norm_f) = (0.0, 0.0, 0.0);
    for which in 0..2 {
        for i in 0..m {
            for j in 0..p {
                let (mut up_mu, mut up_ls) = (mu.clone(), ls.clone());
                let (mut dn_mu, mut dn_ls) = (mu.clone(), ls.clone());
                if which == 0 {
                    up_mu[[i, j]] += eps;
                    dn_mu[[i, j]] -= eps;
                } else {
                    up_ls[[i, j]] += eps;
                    dn_ls[[i, j]] -= eps;
                }
                let fd = (loss_at(&up_mu, &up_ls) - loss_at(&dn_mu, &dn_ls)) / (2.0 * eps);
                let an = if which == 0 { terms.grad_mu[[i, j]] } else { terms.grad_log_sigma[[i, j]] };
                diff += (an - fd).powi(2);
                norm_a += an * an;
                norm_f += fd * fd;
            }
        }
    }
    diff.sqrt() / norm_a.sqrt().max(norm_f.sqrt())
}

#[test]
fn gradients_match_finite_differences() {
    let priors = [
        PriorConfig::default(),
        PriorConfig::new(0.2, 0.1, 2.0).unwrap(),
        PriorConfig::single_gaussian(1.0),
    ];
    for prior in &priors {
        for seed in 0..10 {
            let err = gradient_error(prior, seed);
            assert!(err < 1e-4, "prior {prior:?} seed {seed}: {err}");
        }
    }
}

fn small_problem() -> triplet_embed::TripletDataset {
    let truth = SparseTruth {
        n_objects: 40,
        n_dims: 3,
        density: 0.4,
        ..Default::default()
    };
    sample_triplet_dataset(&truth.features(5).unwrap(), 6000, 1, TieRule::default()).unwrap()
}

fn small_config(seed: u64) -> TrainConfig {
    TrainConfig {
        p_init: 8,
        batch_size: 256,
        max_epochs: 40,
        stability_window: 40,
        learning_rate: 0.03,
        seed,
        ..Default::default()
    }
}

#[test]
fn training_beats_chance_and_is_deterministic() {
    let ds = small_problem();
    let a = train(&ds, &small_config(3), &PriorConfig::default()).unwrap();
    let b = train(&ds, &small_config(3), &PriorConfig::default()).unwrap();
    assert_eq!(a.embedding.mu, b.embedding.mu);
    assert_eq!(a.embedding.log_sigma, b.embedding.log_sigma);
    assert_eq!(a.log, b.log);
    assert!(a.log.final_val_accuracy.unwrap() > 0.6);
    let c = train(&ds, &small_config(4), &PriorConfig::default()).unwrap();
    assert_ne!(a.embedding.mu, c.embedding.mu);
}

#[test]
fn pruning_is_monotone_and_frozen() {
    let ds = small_problem();
    let model = train(&ds, &small_config(1), &PriorConfig::default()).unwrap();
    let counts: Vec<usize> = model.log.epochs.iter().map(|e| e.n_active).collect();
    assert!(counts.windows(2).all(|w| w[1] <= w[0]));
    let e = &model.embedding;
    for d in 0..e.n_dims() {
        if !e.active_dims.contains(&d) {
            assert!(e.mu.column(d).iter().all(|&v| v == 0.0));
        }
    }
    let point = e.point_estimate();
    assert!(point.iter().all(|&v| v >= 0.0));
    let pruned = e.pruned_embedding();
    assert_eq!(pruned.dim_ids(), &e.active_dims[..]);
    let sums: Vec<f64> = (0..pruned.n_dims()).map(|c| pruned.values().column(c).sum()).collect();
    assert!(sums.windows(2).all(|w| w[0] >= w[1]));
    // Every surviving dimension is reliably non-zero for enough objects.
    for &d in &e.active_dims {
        let n = (0..e.n_objects())
            .filter(|&i| keep_probability(e.mu[[i, d]], e.log_sigma[[i, d]]) >= 0.95)
            .count();
        assert!(n >= 5);
    }
}

#[test]
fn model_directory_round_trip() {
    let ds = small_problem();
    let model = train(&ds, &small_config(2), &PriorConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_model_dir(dir.path(), &model).unwrap();
    for f in [EMBEDDING_MU, EMBEDDING_SIGMA, EMBEDDING_PRUNED, TRAIN_LOG] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let back = load_model_dir(dir.path()).unwrap();
    assert_eq!(back.embedding.mu, model.embedding.mu);
    assert_eq!(back.embedding.active_dims, model.embedding.active_dims);
    assert_eq!(back.log, model.log);
    let pruned = PointEmbedding::load(dir.path()).unwrap();
    assert_eq!(pruned, model.embedding.pruned_embedding());
    assert_eq!(load_full_point_estimate(dir.path()).unwrap(), model.embedding.point_estimate());
}

#[test]
fn rejects_tiny_datasets_and_bad_config() {
    let ds = small_problem();
    let cfg = TrainConfig {
        batch_size: 100_000,
        ..small_config(0)
    };
    assert!(train(&ds, &cfg, &PriorConfig::default()).is_err());
    let cfg = TrainConfig {
        learning_rate: -1.0,
        ..small_config(0)
    };
    assert!(train(&ds, &cfg, &PriorConfig::default()).is_err());
}
