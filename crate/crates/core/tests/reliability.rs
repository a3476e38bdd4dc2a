use ndarray::{Array2, Axis};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triplet_embed::reliability::*;

fn uniform(m: usize, p: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((m, p), || rng.random::<f64>())
}

#[test]
fn identical_runs_score_one() {
    let a = uniform(100, 8, 1);
    let scores = split_half_reliability(&[a.view(), a.view()]).unwrap();
    for s in &scores {
        assert!((s.score - 1.0).abs() < 1e-6, "{}", s.score);
        assert!(s.matches.iter().all(|m| m.matched_dim == m.dim));
    }
}

#[test]
fn permuted_copy_scores_one() {
    let a = uniform(100, 8, 2);
    let perm = [5, 2, 7, 0, 1, 3, 6, 4];
    let b = a.select(Axis(1), &perm);
    let scores = split_half_reliability(&[a.view(), b.view()]).unwrap();
    assert!(scores.iter().all(|s| (s.score - 1.0).abs() < 1e-6));
    for m in &scores[1].matches {
        assert_eq!(m.matched_dim, perm[m.dim]);
    }
}

#[test]
fn independent_noise_scores_near_zero() {
    let a = uniform(1000, 20, 3);
    let b = uniform(1000, 20, 4);
    let scores = split_half_reliability(&[a.view(), b.view()]).unwrap();
    for s in &scores {
        assert!(s.score.abs() < 0.1, "{}", s.score);
    }
}

#[test]
fn zero_columns_count_as_uncorrelated() {
    let mut a = uniform(50, 4, 5);
    a.column_mut(3).fill(0.0);
    let scores = split_half_reliability(&[a.view(), a.view()]).unwrap();
    let zero = &scores[0].matches[3];
    assert_eq!(zero.r_holdout, 0.0);
    // Three perfect matches and one zero, averaged in z space.
    let want = fisher_z_inverse(3.0 * fisher_z(1.0) / 4.0);
    assert!((scores[0].score - want).abs() < 1e-12);
}

#[test]
fn three_runs_pool_all_others() {
    let a = uniform(60, 3, 6);
    let b = uniform(60, 3, 7);
    let scores = split_half_reliability(&[a.view(), b.view(), a.view()]).unwrap();
    assert!(scores[0].matches.iter().all(|m| m.matched_run == 2));
    assert!(scores[2].matches.iter().all(|m| m.matched_run == 0));
    assert_eq!(select_best_run(&scores.iter().map(|s| s.score).collect::<Vec<_>>()).unwrap(), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scores_bounded_and_column_order_free(seed in 0u64..500) {
        let a = uniform(40, 5, seed);
        let b = uniform(40, 4, seed + 1000);
        let base = split_half_reliability(&[a.view(), b.view()]).unwrap();
        let b_rev = b.select(Axis(1), &[3, 2, 1, 0]);
        let permuted = split_half_reliability(&[a.view(), b_rev.view()]).unwrap();
        for (x, y) in base.iter().zip(&permuted) {
            prop_assert!(x.score >= -1.0 && x.score <= 1.0);
            prop_assert!((x.score - y.score).abs() < 1e-12);
        }
    }

    #[test]
    fn fisher_round_trip(r in -0.999999f64..0.999999) {
        prop_assert!((fisher_z_inverse(fisher_z(r)) - r).abs() < 1e-6);
    }
}
