//! Split-half reproducibility of embedding dimensions across independent runs.
//!
//! Each dimension of a run is matched to its most correlated dimension among
//! all other runs using the odd-indexed objects, and the matched pair is then
//! scored on the even-indexed objects. Scores are averaged in Fisher z space.

use ndarray::{s, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::split_objects_odd_even;
use crate::error::{Error, Result};
use crate::stats::unit_columns;

/// Correlations are clamped to this magnitude before `atanh`.
pub const Z_CLAMP: f64 = 1.0 - 1e-7;

pub fn fisher_z(r: f64) -> f64 {
    r.clamp(-Z_CLAMP, Z_CLAMP).atanh()
}

pub fn fisher_z_inverse(z: f64) -> f64 {
    z.tanh()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionMatch {
    pub dim: usize,
    pub matched_run: usize,
    pub matched_dim: usize,
    /// Correlation on the odd-indexed objects, used for matching.
    pub r_match: f64,
    /// Correlation of the matched pair on the even-indexed objects.
    pub r_holdout: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReliability {
    pub run: usize,
    pub score: f64,
    pub matches: Vec<DimensionMatch>,
}

/// Scores every run against the pooled dimensions of all other runs.
///
/// Runs are point estimates over the same objects (rows); they may differ in
/// the number of columns. Constant columns correlate 0 with everything.
pub fn split_half_reliability(runs: &[ArrayView2<'_, f64>]) -> Result<Vec<RunReliability>> {
    if runs.len() < 2 {
        return Err(Error::invalid(
            "split-half reliability needs at least two runs",
        ));
    }
    let m = runs[0].nrows();
    if let Some(bad) = runs.iter().find(|r| r.nrows() != m) {
        return Err(Error::Incompatible(format!(
            "expected {m} objects in every run, found {} objects",
            bad.nrows()
        )));
    }
    if m < 4 {
        return Err(Error::invalid(
            "split-half reliability needs at least 4 objects",
        ));
    }
    if runs.iter().any(|r| r.ncols() == 0) {
        return Err(Error::invalid("every run needs at least one dimension"));
    }
    let (even, odd) = split_objects_odd_even(m);
    let halves = |idx: &[usize]| -> Vec<Array2<f64>> {
        runs.iter()
            .map(|r| unit_columns(r.select(Axis(0), idx).view()))
            .collect()
    };
    let odd_units = halves(&odd);
    let even_units = halves(&even);

    let results = (0..runs.len())
        .into_par_iter()
        .map(|run| {
            let matches: Vec<DimensionMatch> = (0..runs[run].ncols())
                .map(|dim| best_match(run, dim, &odd_units, &even_units))
                .collect();
            let mean_z =
                matches.iter().map(|d| fisher_z(d.r_holdout)).sum::<f64>() / matches.len() as f64;
            RunReliability {
                run,
                score: fisher_z_inverse(mean_z),
                matches,
            }
        })
        .collect();
    Ok(results)
}

fn best_match(
    run: usize,
    dim: usize,
    odd_units: &[Array2<f64>],
    even_units: &[Array2<f64>],
) -> DimensionMatch {
    let src = odd_units[run].row(dim);
    let mut best: Option<(usize, usize, f64)> = None;
    for (other, units) in odd_units.iter().enumerate() {
        if other == run {
            continue;
        }
        for (d, col) in units.axis_iter(Axis(0)).enumerate() {
            let r = src.dot(&col).clamp(-1.0, 1.0);
            if best.is_none_or(|(_, _, b)| r > b) {
                best = Some((other, d, r));
            }
        }
    }
    let (matched_run, matched_dim, r_match) = best.expect("at least one other run");
    let r_holdout = even_units[run]
        .slice(s![dim, ..])
        .dot(&even_units[matched_run].slice(s![matched_dim, ..]))
        .clamp(-1.0, 1.0);
    DimensionMatch {
        dim,
        matched_run,
        matched_dim,
        r_match,
        r_holdout,
    }
}

/// Index of the highest score; ties go to the lowest index and NaN never wins.
pub fn select_best_run(scores: &[f64]) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if s.is_nan() {
            continue;
        }
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best.ok_or_else(|| Error::invalid("no finite reliability score to select from"))
}
