//! Jackknife relevance of embedding dimensions for single odd-one-out choices.
//!
//! A dimension's relevance for a triplet is how much the probability of the
//! recorded choice drops when that dimension is removed.

use std::collections::BTreeMap;

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::choice::chosen_probability;
use crate::data::{DimensionLabel, DimensionLabelTable, TripletDataset, TripletRecord};
use crate::error::{Error, Result};

fn pair_dots(embedding: ArrayView2<'_, f64>, t: &TripletRecord) -> [f64; 3] {
    let [a, b, o] = t.objects();
    let (wa, wb, wo) = (embedding.row(a), embedding.row(b), embedding.row(o));
    [wa.dot(&wb), wa.dot(&wo), wb.dot(&wo)]
}

/// Softmax probability of the recorded pair among the three pairs.
pub fn triplet_choice_probability(embedding: ArrayView2<'_, f64>, t: &TripletRecord) -> f64 {
    chosen_probability(pair_dots(embedding, t))
}

/// `p_full - p_without_j` for every dimension `j`, computed by removing each
/// dimension's share from the three cached dot products.
pub fn jackknife_relevance(embedding: ArrayView2<'_, f64>, t: &TripletRecord) -> Vec<f64> {
    let dots = pair_dots(embedding, t);
    let p_full = chosen_probability(dots);
    let [a, b, o] = t.objects();
    let (wa, wb, wo) = (embedding.row(a), embedding.row(b), embedding.row(o));
    (0..embedding.ncols())
        .map(|j| {
            let c = [wa[j] * wb[j], wa[j] * wo[j], wb[j] * wo[j]];
            if c == [0.0; 3] {
                return 0.0;
            }
            p_full - chosen_probability([dots[0] - c[0], dots[1] - c[1], dots[2] - c[2]])
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletRelevance {
    pub index: usize,
    pub p_full: f64,
    /// Dimension with the largest signed delta, among dimensions that touch
    /// the triplet at all.
    pub winner: Option<usize>,
    pub winner_delta: Option<f64>,
    /// Dimension with the largest absolute delta.
    pub winner_abs: Option<usize>,
}

fn winners(
    deltas: &[f64],
    embedding: ArrayView2<'_, f64>,
    t: &TripletRecord,
) -> (Option<(usize, f64)>, Option<usize>) {
    let [a, b, o] = t.objects();
    let mut signed: Option<(usize, f64)> = None;
    let mut abs: Option<(usize, f64)> = None;
    for (j, &d) in deltas.iter().enumerate() {
        let touches = embedding[[a, j]] * embedding[[b, j]] != 0.0
            || embedding[[a, j]] * embedding[[o, j]] != 0.0
            || embedding[[b, j]] * embedding[[o, j]] != 0.0;
        if !touches {
            continue;
        }
        if signed.is_none_or(|(_, s)| d > s) {
            signed = Some((j, d));
        }
        if abs.is_none_or(|(_, s)| d.abs() > s) {
            abs = Some((j, d.abs()));
        }
    }
    (signed, abs.map(|(j, _)| j))
}

pub fn triplet_relevance(
    embedding: ArrayView2<'_, f64>,
    triplets: &[TripletRecord],
) -> Vec<TripletRelevance> {
    triplets
        .par_iter()
        .enumerate()
        .map(|(index, t)| {
            let deltas = jackknife_relevance(embedding, t);
            let (signed, winner_abs) = winners(&deltas, embedding, t);
            TripletRelevance {
                index,
                p_full: triplet_choice_probability(embedding, t),
                winner: signed.map(|w| w.0),
                winner_delta: signed.map(|w| w.1),
                winner_abs,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelHistogram {
    pub counts: BTreeMap<DimensionLabel, usize>,
    pub fractions: BTreeMap<DimensionLabel, f64>,
}

impl LabelHistogram {
    fn from_winners(winners: impl Iterator<Item = usize>, labels: &DimensionLabelTable) -> Self {
        let mut counts: BTreeMap<DimensionLabel, usize> =
            DimensionLabel::ALL.iter().map(|&l| (l, 0)).collect();
        for w in winners {
            *counts.get_mut(&labels.get(w)).expect("all labels present") += 1;
        }
        let total: usize = counts.values().sum();
        let fractions = counts
            .iter()
            .map(|(&l, &c)| {
                (
                    l,
                    if total == 0 {
                        0.0
                    } else {
                        c as f64 / total as f64
                    },
                )
            })
            .collect();
        Self { counts, fractions }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceSummary {
    pub n_triplets: usize,
    /// Triplets where no dimension is non-zero on any pair.
    pub n_no_winner: usize,
    pub mean_p_full: f64,
    pub signed: LabelHistogram,
    pub absolute: LabelHistogram,
    /// How often each dimension wins on signed delta.
    pub wins_per_dimension: Vec<usize>,
}

pub fn aggregate_relevance(
    embedding: ArrayView2<'_, f64>,
    triplets: &TripletDataset,
    labels: &DimensionLabelTable,
) -> Result<(RelevanceSummary, Vec<TripletRelevance>)> {
    if triplets.n_objects > embedding.nrows() {
        return Err(Error::Incompatible(format!(
            "expected embedding with at least {} objects, found {} objects",
            triplets.n_objects,
            embedding.nrows()
        )));
    }
    let per = triplet_relevance(embedding, &triplets.records);
    let mut wins = vec![0usize; embedding.ncols()];
    for w in per.iter().filter_map(|r| r.winner) {
        wins[w] += 1;
    }
    let summary = RelevanceSummary {
        n_triplets: per.len(),
        n_no_winner: per.iter().filter(|r| r.winner.is_none()).count(),
        mean_p_full: if per.is_empty() {
            0.0
        } else {
            per.iter().map(|r| r.p_full).sum::<f64>() / per.len() as f64
        },
        signed: LabelHistogram::from_winners(per.iter().filter_map(|r| r.winner), labels),
        absolute: LabelHistogram::from_winners(per.iter().filter_map(|r| r.winner_abs), labels),
        wins_per_dimension: wins,
    };
    Ok((summary, per))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub index: usize,
    pub p_a: f64,
    pub p_b: f64,
    pub diff: f64,
}

/// Triplets sorted by how differently two embeddings rate the recorded
/// choice, largest `|p_a - p_b|` first; ties keep file order.
pub fn rank_by_divergence(
    a: ArrayView2<'_, f64>,
    b: ArrayView2<'_, f64>,
    triplets: &TripletDataset,
) -> Result<Vec<Divergence>> {
    if a.nrows() != b.nrows() {
        return Err(Error::Incompatible(format!(
            "expected {} objects, found {} objects",
            a.nrows(),
            b.nrows()
        )));
    }
    if triplets.n_objects > a.nrows() {
        return Err(Error::Incompatible(format!(
            "expected embeddings with at least {} objects, found {} objects",
            triplets.n_objects,
            a.nrows()
        )));
    }
    let mut out: Vec<Divergence> = triplets
        .records
        .par_iter()
        .enumerate()
        .map(|(index, t)| {
            let p_a = triplet_choice_probability(a, t);
            let p_b = triplet_choice_probability(b, t);
            Divergence {
                index,
                p_a,
                p_b,
                diff: p_a - p_b,
            }
        })
        .collect();
    out.sort_by(|x, y| {
        y.diff
            .abs()
            .total_cmp(&x.diff.abs())
            .then(x.index.cmp(&y.index))
    });
    Ok(out)
}
