//! Simulated odd-one-out behavior: the pair with the largest dot product is
//! judged most similar, the remaining object is the odd one out.

use std::collections::HashSet;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::data::{FeatureMatrix, Provenance, TripletDataset, TripletRecord};
use crate::error::{Error, Result};
use crate::rng::substream;

/// Candidates drawn per block in sparse sampling. Block contents depend only
/// on `(seed, block index)`, never on how many workers ran.
const SAMPLE_BLOCK: usize = 1 << 16;

/// Default ceiling on the number of triples `enumerate_all_triplets` accepts.
pub const DEFAULT_ENUMERATION_CAP: u128 = 50_000_000;

/// Which pair wins when several share the maximal dot product. Pairs are
/// compared as `(min index, max index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    #[default]
    LowestPairIndices,
    HighestPairIndices,
}

impl FromStr for TieRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lowest-pair-indices" | "lowest" => Ok(TieRule::LowestPairIndices),
            "highest-pair-indices" | "highest" => Ok(TieRule::HighestPairIndices),
            other => Err(Error::invalid(format!("unknown tie rule {other:?}"))),
        }
    }
}

/// The three pairwise dot products of a sorted triple `i < j < k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityTriple {
    pub s_ij: f64,
    pub s_ik: f64,
    pub s_jk: f64,
}

impl SimilarityTriple {
    pub fn from_features(features: &FeatureMatrix, i: usize, j: usize, k: usize) -> Self {
        Self {
            s_ij: features.dot(i, j),
            s_ik: features.dot(i, k),
            s_jk: features.dot(j, k),
        }
    }
}

pub fn choose_odd_one_out(
    features: &FeatureMatrix,
    i: usize,
    j: usize,
    k: usize,
    tie_rule: TieRule,
) -> Result<TripletRecord> {
    if i == j || i == k || j == k {
        return Err(Error::InvalidTriplet(i, j, k, "indices must be distinct"));
    }
    let m = features.n_objects();
    if i >= m || j >= m || k >= m {
        return Err(Error::InvalidTriplet(i, j, k, "index out of range"));
    }
    let mut t = [i, j, k];
    t.sort_unstable();
    Ok(choose_sorted(features, t, tie_rule))
}

fn choose_sorted(
    features: &FeatureMatrix,
    [i, j, k]: [usize; 3],
    tie_rule: TieRule,
) -> TripletRecord {
    let s = SimilarityTriple::from_features(features, i, j, k);
    // Lexicographic pair order for sorted indices: (i,j) < (i,k) < (j,k).
    let candidates = [(s.s_ij, i, j, k), (s.s_ik, i, k, j), (s.s_jk, j, k, i)];
    let mut best = 0;
    for (c, cand) in candidates.iter().enumerate().skip(1) {
        let better = match tie_rule {
            TieRule::LowestPairIndices => cand.0 > candidates[best].0,
            TieRule::HighestPairIndices => cand.0 >= candidates[best].0,
        };
        if better {
            best = c;
        }
    }
    let (_, a, b, odd) = candidates[best];
    TripletRecord::new(a, b, odd).expect("distinct by construction")
}

pub fn n_choose_3(m: usize) -> u128 {
    let m = m as u128;
    if m < 3 {
        0
    } else {
        m * (m - 1) * (m - 2) / 6
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    pub n: usize,
    pub seed: u64,
    pub tie_rule: TieRule,
    /// Permit the same object triple to be drawn more than once.
    pub allow_repeats: bool,
}

/// `n` distinct triples drawn uniformly, each resolved by [`choose_odd_one_out`].
pub fn sample_triplet_dataset(
    features: &FeatureMatrix,
    n: usize,
    seed: u64,
    tie_rule: TieRule,
) -> Result<TripletDataset> {
    sample_triplet_dataset_with(
        features,
        &SampleOptions {
            n,
            seed,
            tie_rule,
            allow_repeats: false,
        },
    )
}

pub fn sample_triplet_dataset_with(
    features: &FeatureMatrix,
    opts: &SampleOptions,
) -> Result<TripletDataset> {
    let m = features.n_objects();
    if opts.n == 0 {
        return Err(Error::invalid("number of triplets must be at least 1"));
    }
    let available = n_choose_3(m);
    if !opts.allow_repeats && opts.n as u128 > available {
        return Err(Error::TooManyTriplets {
            requested: opts.n as u128,
            available,
        });
    }
    if m >= 1 << 21 {
        return Err(Error::invalid(format!(
            "sampling supports fewer than 2^21 objects, got {m}"
        )));
    }

    let triples = if !opts.allow_repeats && available <= 10 * opts.n as u128 {
        sample_dense(m, opts.n, opts.seed)
    } else {
        sample_blocks(m, opts.n, opts.seed, opts.allow_repeats)
    };

    let records: Vec<TripletRecord> = triples
        .par_iter()
        .map(|&t| choose_sorted(features, t, opts.tie_rule))
        .collect();
    TripletDataset::new(records, m, Provenance::Simulated)
}

/// Near-exhaustive regime: draw distinct ranks of the lexicographic
/// enumeration (a partial shuffle) and unrank them.
fn sample_dense(m: usize, n: usize, seed: u64) -> Vec<[usize; 3]> {
    let total = n_choose_3(m) as usize;
    let mut rng = substream(seed, "sample", 0);
    rand::seq::index::sample(&mut rng, total, n)
        .into_iter()
        .map(|r| unrank_triple(m, r as u128))
        .collect()
}

fn sample_blocks(m: usize, n: usize, seed: u64, allow_repeats: bool) -> Vec<[usize; 3]> {
    let mut seen: HashSet<u64> = HashSet::with_capacity(if allow_repeats { 0 } else { n });
    let mut out = Vec::with_capacity(n);
    let mut next_block = 0u64;
    while out.len() < n {
        let need = n - out.len();
        let n_blocks = (need / SAMPLE_BLOCK + 1).min(256) as u64;
        let blocks: Vec<Vec<[usize; 3]>> = (next_block..next_block + n_blocks)
            .into_par_iter()
            .map(|b| draw_block(m, seed, b))
            .collect();
        next_block += n_blocks;
        for t in blocks.into_iter().flatten() {
            if out.len() == n {
                break;
            }
            let key = (t[0] as u64) << 42 | (t[1] as u64) << 21 | t[2] as u64;
            if allow_repeats || seen.insert(key) {
                out.push(t);
            }
        }
    }
    out
}

fn draw_block(m: usize, seed: u64, block: u64) -> Vec<[usize; 3]> {
    let mut rng = substream(seed, "sample", block + 1);
    (0..SAMPLE_BLOCK)
        .map(|_| {
            let i = rng.random_range(0..m);
            let mut j = rng.random_range(0..m - 1);
            if j >= i {
                j += 1;
            }
            let k = loop {
                let k = rng.random_range(0..m);
                if k != i && k != j {
                    break k;
                }
            };
            let mut t = [i, j, k];
            t.sort_unstable();
            t
        })
        .collect()
}

/// Inverse of the lexicographic rank of `i < j < k` among all triples of `m`.
fn unrank_triple(m: usize, mut rank: u128) -> [usize; 3] {
    let pairs_after = |i: usize| -> u128 {
        let r = (m - 1 - i) as u128;
        r * (r.saturating_sub(1)) / 2
    };
    let mut i = 0;
    while rank >= pairs_after(i) {
        rank -= pairs_after(i);
        i += 1;
    }
    let mut j = i + 1;
    while rank >= (m - 1 - j) as u128 {
        rank -= (m - 1 - j) as u128;
        j += 1;
    }
    [i, j, j + 1 + rank as usize]
}

/// Every distinct triple exactly once, in lexicographic order.
pub fn enumerate_all_triplets(
    features: &FeatureMatrix,
    tie_rule: TieRule,
    cap: u128,
) -> Result<TripletDataset> {
    let m = features.n_objects();
    let total = n_choose_3(m);
    if total > cap {
        return Err(Error::TooManyTriplets {
            requested: total,
            available: cap,
        });
    }
    let records: Vec<TripletRecord> = (0..m)
        .into_par_iter()
        .flat_map_iter(|i| {
            (i + 1..m).flat_map(move |j| {
                (j + 1..m).map(move |k| choose_sorted(features, [i, j, k], tie_rule))
            })
        })
        .collect();
    TripletDataset::new(records, m, Provenance::Simulated)
}
