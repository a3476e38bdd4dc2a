//! Similarity matrices reconstructed from embeddings, and the comparisons
//! built on them: RSM correlation, dimension matching and cumulative RSA.
//!
//! The softmax similarity of objects `i` and `j` is the probability that the
//! pair `(i, j)` is kept together when a third object `k` is shown, averaged
//! over contexts `k`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{read_matrix_tsv, write_matrix_tsv};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::stats::{column_correlations, pearson};

/// Largest object count reconstructed exactly by [`ReconstructMode::auto`].
pub const EXACT_MAX_OBJECTS: usize = 4096;
/// Context count used by [`ReconstructMode::auto`] above the exact limit.
pub const DEFAULT_CONTEXTS: usize = 1024;

// exp() of a shifted dot product stays a normal f64 down to about -708.
const EXP_TABLE_RANGE: f64 = 700.0;
const LANES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricTag {
    SoftmaxChoiceProb,
    DotProduct,
}

impl fmt::Display for MetricTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricTag::SoftmaxChoiceProb => "softmax_choice_prob",
            MetricTag::DotProduct => "dot_product",
        })
    }
}

/// Symmetric object-by-object similarity matrix with a unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Rsm {
    values: Array2<f64>,
    metric: MetricTag,
}

impl Rsm {
    pub fn new(values: Array2<f64>, metric: MetricTag) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::Incompatible(format!(
                "expected a square matrix, found {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        for ((r, c), v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
        Ok(Self { values, metric })
    }

    pub fn size(&self) -> usize {
        self.values.nrows()
    }

    pub fn metric(&self) -> MetricTag {
        self.metric
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    /// Strict upper triangle in row-major order.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let m = self.size();
        let mut out = Vec::with_capacity(m * m.saturating_sub(1) / 2);
        for i in 0..m {
            out.extend(self.values.row(i).iter().skip(i + 1));
        }
        out
    }

    pub fn max_asymmetry(&self) -> f64 {
        let m = self.size();
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in i + 1..m {
                worst = worst.max((self.values[[i, j]] - self.values[[j, i]]).abs());
            }
        }
        worst
    }

    /// Restriction to the given objects, in the given order.
    pub fn subset(&self, objects: &[usize]) -> Result<Rsm> {
        if let Some(&bad) = objects.iter().find(|&&o| o >= self.size()) {
            return Err(Error::invalid(format!(
                "object {bad} out of range for an RSM of size {}",
                self.size()
            )));
        }
        let values = self
            .values
            .select(Axis(0), objects)
            .select(Axis(1), objects);
        Ok(Rsm {
            values,
            metric: self.metric,
        })
    }

    pub fn save_tsv(&self, path: &Path) -> Result<()> {
        let ids: Vec<usize> = (0..self.size()).collect();
        write_matrix_tsv(path, &ids, self.values.view())
    }

    pub fn load_tsv(path: &Path, metric: MetricTag) -> Result<Rsm> {
        let (_, values) = read_matrix_tsv(path)?;
        Rsm::new(values, metric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconstructMode {
    /// Average over every context object.
    Exact,
    /// Average over a fixed random subset of contexts per pair.
    Sampled { contexts: usize, seed: u64 },
}

impl ReconstructMode {
    /// Exact up to [`EXACT_MAX_OBJECTS`] objects, sampled beyond.
    pub fn auto(n_objects: usize, seed: u64) -> Self {
        if n_objects <= EXACT_MAX_OBJECTS {
            ReconstructMode::Exact
        } else {
            ReconstructMode::Sampled {
                contexts: DEFAULT_CONTEXTS,
                seed,
            }
        }
    }

    /// Parses `exact` or `sampled:K`.
    pub fn parse(s: &str, seed: u64) -> Result<Self> {
        match s.split_once(':') {
            None if s == "exact" => Ok(ReconstructMode::Exact),
            Some(("sampled", k)) => {
                let contexts = usize::from_str(k)
                    .map_err(|_| Error::invalid(format!("bad context count in mode {s:?}")))?;
                if contexts == 0 {
                    return Err(Error::invalid("sampled mode needs at least one context"));
                }
                Ok(ReconstructMode::Sampled { contexts, seed })
            }
            _ => Err(Error::invalid(format!(
                "unknown RSM mode {s:?} (expected exact or sampled:K)"
            ))),
        }
    }
}

fn check_embedding(embedding: ArrayView2<'_, f64>) -> Result<()> {
    if embedding.nrows() < 3 {
        return Err(Error::invalid(format!(
            "an RSM needs at least 3 objects, got {}",
            embedding.nrows()
        )));
    }
    for ((r, c), &v) in embedding.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row: r, col: c });
        }
        if v < 0.0 {
            return Err(Error::Negative {
                row: r,
                col: c,
                value: v,
            });
        }
    }
    Ok(())
}

/// Plain dot-product similarity `W Wᵀ`, diagonal set to 1.
pub fn dot_product_rsm(embedding: ArrayView2<'_, f64>) -> Result<Rsm> {
    check_embedding(embedding)?;
    let mut values = embedding.dot(&embedding.t());
    values.diag_mut().fill(1.0);
    Ok(Rsm {
        values,
        metric: MetricTag::DotProduct,
    })
}

/// Softmax choice-probability RSM.
///
/// Each pair is computed by one worker in a fixed summation order, so the
/// result does not depend on the number of threads.
pub fn reconstruct_rsm(embedding: ArrayView2<'_, f64>, mode: ReconstructMode) -> Result<Rsm> {
    check_embedding(embedding)?;
    let m = embedding.nrows();
    if let ReconstructMode::Sampled { contexts: 0, .. } = mode {
        return Err(Error::invalid("sampled mode needs at least one context"));
    }
    let dots = embedding.dot(&embedding.t());
    rsm_from_dots(dots, mode, m)
}

fn rsm_from_dots(dots: Array2<f64>, mode: ReconstructMode, m: usize) -> Result<Rsm> {
    let mut dots = if dots.is_standard_layout() {
        dots
    } else {
        dots.as_standard_layout().into_owned()
    };
    let (lo, hi) = dots
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let table = hi - lo < EXP_TABLE_RANGE;
    if table {
        dots.mapv_inplace(|d| (d - hi).exp());
    }
    let kernel = Kernel {
        values: &dots,
        table,
    };

    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| match mode {
            ReconstructMode::Exact => (i + 1..m).map(|j| kernel.exact(i, j)).collect(),
            ReconstructMode::Sampled { contexts, seed } => {
                let mut rng = substream(seed, "contexts", i as u64);
                let pool = m - 2;
                let mut ctx = Vec::with_capacity(contexts.min(pool));
                (i + 1..m)
                    .map(|j| {
                        ctx.clear();
                        if contexts >= pool {
                            ctx.extend((0..m).filter(|&k| k != i && k != j));
                        } else {
                            ctx.extend(index::sample(&mut rng, pool, contexts).into_iter().map(
                                |x| {
                                    let k = if x >= i { x + 1 } else { x };
                                    if k >= j {
                                        k + 1
                                    } else {
                                        k
                                    }
                                },
                            ));
                            ctx.sort_unstable();
                        }
                        kernel.over(i, j, &ctx)
                    })
                    .collect()
            }
        })
        .collect();

    let mut values = Array2::from_elem((m, m), 1.0);
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            values[[i, j]] = v;
            values[[j, i]] = v;
        }
    }
    Ok(Rsm {
        values,
        metric: MetricTag::SoftmaxChoiceProb,
    })
}

/// Either a table of `exp(d - max)` or raw dot products.
struct Kernel<'a> {
    values: &'a Array2<f64>,
    table: bool,
}

impl Kernel<'_> {
    fn exact(&self, i: usize, j: usize) -> f64 {
        let m = self.values.nrows();
        let ri = self.values.row(i);
        let rj = self.values.row(j);
        let (ri, rj) = (
            ri.as_slice().expect("standard layout"),
            rj.as_slice().expect("standard layout"),
        );
        let ranges = [(0, i), (i + 1, j), (j + 1, m)];
        if self.table {
            let e = ri[j];
            let mut total = 0.0;
            for (a, b) in ranges {
                total += lane_sum(e, &ri[a..b], &rj[a..b]);
            }
            e * total / (m - 2) as f64
        } else {
            let mut total = 0.0;
            for (a, b) in ranges {
                for k in a..b {
                    total += softmax_first(ri[j], ri[k], rj[k]);
                }
            }
            total / (m - 2) as f64
        }
    }

    fn over(&self, i: usize, j: usize, contexts: &[usize]) -> f64 {
        let ri = self.values.row(i);
        let rj = self.values.row(j);
        let mut acc = [0.0; LANES];
        if self.table {
            let e = ri[j];
            for (n, &k) in contexts.iter().enumerate() {
                acc[n % LANES] += 1.0 / (e + ri[k] + rj[k]);
            }
            e * reduce(acc) / contexts.len() as f64
        } else {
            for (n, &k) in contexts.iter().enumerate() {
                acc[n % LANES] += softmax_first(ri[j], ri[k], rj[k]);
            }
            reduce(acc) / contexts.len() as f64
        }
    }
}

/// `sum_k 1 / (e + a_k + b_k)` with eight fixed accumulators.
#[inline]
fn lane_sum(e: f64, a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; LANES];
    let mut ca = a.chunks_exact(LANES);
    let mut cb = b.chunks_exact(LANES);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        for l in 0..LANES {
            acc[l] += 1.0 / (e + xa[l] + xb[l]);
        }
    }
    for (l, (&xa, &xb)) in ca.remainder().iter().zip(cb.remainder()).enumerate() {
        acc[l] += 1.0 / (e + xa + xb);
    }
    reduce(acc)
}

#[inline]
fn reduce(acc: [f64; LANES]) -> f64 {
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))
}

#[inline]
fn softmax_first(dij: f64, dik: f64, djk: f64) -> f64 {
    let mx = dij.max(dik).max(djk);
    let a = (dij - mx).exp();
    a / (a + (dik - mx).exp() + (djk - mx).exp())
}

/// Pearson correlation over the strict upper triangles.
pub fn rsm_pearson(a: &Rsm, b: &Rsm) -> Result<f64> {
    if a.size() != b.size() {
        return Err(Error::Incompatible(format!(
            "expected RSM of size {}, found size {}",
            a.size(),
            b.size()
        )));
    }
    pearson(&a.upper_triangle(), &b.upper_triangle())
        .ok_or_else(|| Error::ZeroVariance("RSM upper triangle is constant".into()))
}

/// Squared RSM correlation, divided by the noise ceiling when one is given.
pub fn variance_explained_vs_ceiling(
    predicted: &Rsm,
    truth: &Rsm,
    noise_ceiling: Option<f64>,
) -> Result<f64> {
    let r = rsm_pearson(predicted, truth)?;
    match noise_ceiling {
        None => Ok(r * r),
        Some(c) if c > 0.0 && c <= 1.0 => Ok(r * r / c),
        Some(c) => Err(Error::invalid(format!(
            "noise ceiling must lie in (0, 1], got {c}"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimMatch {
    pub source: usize,
    pub target: usize,
    pub r: f64,
}

/// Pairs source columns with target columns by Pearson correlation.
///
/// With replacement every source column takes its best target. Without
/// replacement pairs are assigned greedily from the highest remaining
/// correlation, each target used once. Output is sorted by descending `r`.
pub fn match_dimensions(
    source: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
    replacement: bool,
) -> Result<Vec<DimMatch>> {
    if source.nrows() != target.nrows() {
        return Err(Error::Incompatible(format!(
            "expected {} objects, found {} objects",
            source.nrows(),
            target.nrows()
        )));
    }
    if !replacement && target.ncols() < source.ncols() {
        return Err(Error::invalid(format!(
            "matching without replacement needs at least as many target dimensions ({}) as source dimensions ({})",
            target.ncols(),
            source.ncols()
        )));
    }
    if target.ncols() == 0 {
        return Err(Error::invalid("target embedding has no dimensions"));
    }
    let c = column_correlations(source, target);
    let mut out = if replacement {
        c.axis_iter(Axis(0))
            .enumerate()
            .map(|(s, row)| {
                let (t, r) =
                    row.iter()
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |best, (t, &r)| {
                            if r > best.1 {
                                (t, r)
                            } else {
                                best
                            }
                        });
                DimMatch {
                    source: s,
                    target: t,
                    r,
                }
            })
            .collect::<Vec<_>>()
    } else {
        let mut pairs: Vec<DimMatch> = c
            .indexed_iter()
            .map(|((s, t), &r)| DimMatch {
                source: s,
                target: t,
                r,
            })
            .collect();
        pairs.sort_by(|a, b| {
            b.r.total_cmp(&a.r)
                .then(a.source.cmp(&b.source))
                .then(a.target.cmp(&b.target))
        });
        let mut used_s = vec![false; source.ncols()];
        let mut used_t = vec![false; target.ncols()];
        let mut out = Vec::with_capacity(source.ncols());
        for p in pairs {
            if !used_s[p.source] && !used_t[p.target] {
                used_s[p.source] = true;
                used_t[p.target] = true;
                out.push(p);
            }
        }
        out
    };
    out.sort_by(|a, b| b.r.total_cmp(&a.r).then(a.source.cmp(&b.source)));
    Ok(out)
}

/// Columns ordered by descending column sum; ties keep index order.
pub fn rank_by_column_sum(embedding: ArrayView2<'_, f64>) -> Vec<usize> {
    let sums: Vec<f64> = embedding.axis_iter(Axis(1)).map(|c| c.sum()).collect();
    let mut order: Vec<usize> = (0..sums.len()).collect();
    order.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativePoint {
    pub k: usize,
    pub dim: usize,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeCurve {
    pub points: Vec<CumulativePoint>,
    /// Correlation of the RSM built from every source dimension.
    pub full_r: f64,
    /// Smallest prefix whose r² reaches 95% of the full r².
    pub k95: Option<usize>,
}

impl CumulativeCurve {
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("k\tdim\tr\tr2\n");
        for p in &self.points {
            s.push_str(&format!("{}\t{}\t{}\t{}\n", p.k, p.dim, p.r, p.r * p.r));
        }
        s
    }
}

/// Correlation with `target` as dimensions of `source` are added one at a
/// time in `ranking` order. Prefix RSMs with zero variance score 0.
pub fn cumulative_rsa(
    target: &Rsm,
    source: ArrayView2<'_, f64>,
    ranking: &[usize],
    mode: ReconstructMode,
) -> Result<CumulativeCurve> {
    if ranking.is_empty() {
        return Err(Error::invalid("cumulative RSA needs a non-empty ranking"));
    }
    check_embedding(source)?;
    let m = source.nrows();
    if target.size() != m {
        return Err(Error::Incompatible(format!(
            "expected target RSM of size {m}, found size {}",
            target.size()
        )));
    }
    let mut seen = vec![false; source.ncols()];
    for &d in ranking {
        if d >= source.ncols() || std::mem::replace(&mut seen[d], true) {
            return Err(Error::invalid(format!(
                "ranking entry {d} is out of range or repeated"
            )));
        }
    }
    let tri = target.upper_triangle();
    let score = |dots: &Array2<f64>| -> Result<f64> {
        let rsm = rsm_from_dots(dots.clone(), mode, m)?;
        Ok(pearson(&tri, &rsm.upper_triangle()).unwrap_or(0.0))
    };

    let full_r = score(&source.dot(&source.t()))?;
    let mut dots = Array2::<f64>::zeros((m, m));
    let mut points = Vec::with_capacity(ranking.len());
    for (n, &d) in ranking.iter().enumerate() {
        let col = source.column(d);
        for i in 0..m {
            let ci = col[i];
            if ci != 0.0 {
                dots.row_mut(i).scaled_add(ci, &col);
            }
        }
        points.push(CumulativePoint {
            k: n + 1,
            dim: d,
            r: score(&dots)?,
        });
    }
    let goal = 0.95 * full_r * full_r;
    let k95 = points.iter().find(|p| p.r * p.r >= goal).map(|p| p.k);
    Ok(CumulativeCurve {
        points,
        full_r,
        k95,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_embedding_is_uniform() {
        let rsm = reconstruct_rsm(Array2::zeros((3, 2)).view(), ReconstructMode::Exact).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 1.0 / 3.0 };
                assert!((rsm.get(i, j) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_dimension_example() {
        let w = array![[1.0], [1.0], [0.0]];
        let rsm = reconstruct_rsm(w.view(), ReconstructMode::Exact).unwrap();
        let e = std::f64::consts::E;
        assert!((rsm.get(0, 1) - e / (e + 2.0)).abs() < 1e-15);
        assert!((rsm.get(0, 2) - 1.0 / (e + 2.0)).abs() < 1e-15);
        assert!((rsm.get(1, 2) - 1.0 / (e + 2.0)).abs() < 1e-15);
        assert!((rsm.get(0, 1) - 0.5761).abs() < 5e-5);
        assert!((rsm.get(0, 2) - 0.2119).abs() < 5e-5);
    }

    #[test]
    fn wide_range_falls_back_to_per_term_softmax() {
        let w = array![[30.0], [30.0], [0.0], [1.0]];
        let rsm = reconstruct_rsm(w.view(), ReconstructMode::Exact).unwrap();
        // Dots of 900 overflow a shared exp table; saturated terms must come
        // out as exact 0 or 1, never NaN or inf.
        assert!(rsm
            .upper_triangle()
            .iter()
            .all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
        assert!((rsm.get(0, 1) - 1.0).abs() < 1e-12);
        let e30 = 30f64.exp();
        assert!((rsm.get(0, 2) - 0.5 / (2.0 + e30)).abs() < 1e-15);
        assert!((rsm.get(2, 3) - 1.0 / (2.0 + e30)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(reconstruct_rsm(Array2::zeros((2, 2)).view(), ReconstructMode::Exact).is_err());
        let w = array![[1.0], [-1.0], [0.0]];
        assert!(matches!(
            reconstruct_rsm(w.view(), ReconstructMode::Exact),
            Err(Error::Negative { .. })
        ));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(
            ReconstructMode::parse("exact", 3).unwrap(),
            ReconstructMode::Exact
        );
        assert_eq!(
            ReconstructMode::parse("sampled:50", 3).unwrap(),
            ReconstructMode::Sampled {
                contexts: 50,
                seed: 3
            }
        );
        assert!(ReconstructMode::parse("sampled:0", 3).is_err());
        assert!(ReconstructMode::parse("fast", 3).is_err());
        assert_eq!(ReconstructMode::auto(1854, 0), ReconstructMode::Exact);
        assert!(matches!(
            ReconstructMode::auto(5000, 0),
            ReconstructMode::Sampled { .. }
        ));
    }

    #[test]
    fn ceiling_division() {
        let a =
            dot_product_rsm(array![[1.0, 0.0], [0.5, 1.0], [0.0, 2.0], [1.0, 1.0]].view()).unwrap();
        assert!((variance_explained_vs_ceiling(&a, &a, Some(1.0)).unwrap() - 1.0).abs() < 1e-12);
        assert!((variance_explained_vs_ceiling(&a, &a, Some(0.5)).unwrap() - 2.0).abs() < 1e-12);
        assert!(variance_explained_vs_ceiling(&a, &a, Some(0.0)).is_err());
    }
}
