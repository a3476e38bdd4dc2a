//! Times exact RSM reconstruction: `rsm_bench [m] [p]`.

use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triplet_embed::rsa::{reconstruct_rsm, ReconstructMode};

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let m = args.first().copied().unwrap_or(1854);
    let p = args.get(1).copied().unwrap_or(70);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let w = Array2::from_shape_simple_fn((m, p), || if rng.random::<f64>() < 0.7 { 0.0 } else { rng.random::<f64>() });
    let t0 = Instant::now();
    let rsm = reconstruct_rsm(w.view(), ReconstructMode::Exact).expect("valid embedding");
    println!(
        "m={m} p={p} threads={} time={:?} asymmetry={}",
        rayon::current_num_threads(),
        t0.elapsed(),
        rsm.max_asymmetry()
    );
}
