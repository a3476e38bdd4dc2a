//! On-disk formats and the in-memory containers every other module shares.
//!
//! Layouts:
//!
//! * feature directory: `meta.json` plus `features.bin`, the latter holding
//!   `n_objects * n_features` little-endian `f32` values in row-major order;
//! * `triplets.tsv`: three zero-based object indices per line, written as
//!   `pair_a, pair_b, odd`;
//! * `labels.tsv`: `dimension_index<TAB>label`;
//! * embedding TSVs: one header row of dimension ids, then one row per object.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util;

pub const META_FILE: &str = "meta.json";
pub const FEATURES_FILE: &str = "features.bin";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub n_objects: usize,
    pub n_features: usize,
    pub dtype: String,
    pub layout: String,
    pub object_ids: Vec<String>,
}

/// Non-negative `n_objects x n_features` activations with unique object ids.
///
/// Values are kept in their 32-bit storage precision so a save/load round trip
/// is bit-exact; all arithmetic on them is done in `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Array2<f32>,
    object_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Rectify negative entries with `max(0, x)` instead of rejecting them.
    pub allow_raw: bool,
}

impl FeatureMatrix {
    pub fn new(values: Array2<f32>, object_ids: Vec<String>) -> Result<Self> {
        Self::build(values, object_ids, false)
    }

    /// Like [`FeatureMatrix::new`] but with sequential ids `"0", "1", ...`.
    pub fn with_default_ids(values: Array2<f32>) -> Result<Self> {
        let ids = (0..values.nrows()).map(|i| i.to_string()).collect();
        Self::new(values, ids)
    }

    fn build(values: Array2<f32>, object_ids: Vec<String>, allow_raw: bool) -> Result<Self> {
        let mut values = values.as_standard_layout().into_owned();
        if values.nrows() < 3 {
            return Err(Error::invalid(format!(
                "feature matrix needs at least 3 objects, got {}",
                values.nrows()
            )));
        }
        if object_ids.len() != values.nrows() {
            return Err(Error::ShapeMismatch {
                expected: values.nrows(),
                found: object_ids.len(),
            });
        }
        let mut seen = HashSet::with_capacity(object_ids.len());
        for id in &object_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        for ((row, col), v) in values.indexed_iter_mut() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
            if *v < 0.0 {
                if allow_raw {
                    *v = 0.0;
                } else {
                    return Err(Error::Negative {
                        row,
                        col,
                        value: f64::from(*v),
                    });
                }
            }
        }
        Ok(Self { values, object_ids })
    }

    pub fn n_objects(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> ArrayView2<'_, f32> {
        self.values.view()
    }

    pub fn object_ids(&self) -> &[String] {
        &self.object_ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        let n = self.n_features();
        &self.values.as_slice().expect("standard layout")[i * n..(i + 1) * n]
    }

    /// Dot product of two object rows, accumulated in `f64`.
    pub fn dot(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(&a, &b)| f64::from(a) * f64::from(b))
            .sum()
    }

    pub fn to_f64(&self) -> Array2<f64> {
        self.values.mapv(f64::from)
    }

    pub fn load(dir: &Path, opts: LoadOptions) -> Result<Self> {
        let meta_path = dir.join(META_FILE);
        let bin_path = dir.join(FEATURES_FILE);
        if !meta_path.exists() {
            return Err(Error::MissingFile(meta_path));
        }
        if !bin_path.exists() {
            return Err(Error::MissingFile(bin_path));
        }
        let meta: FeatureMeta = io_util::read_json(&meta_path)?;
        let bad_meta = |msg: String| Error::Metadata {
            path: meta_path.clone(),
            msg,
        };
        if meta.dtype != "f32" {
            return Err(bad_meta(format!("unsupported dtype {:?}", meta.dtype)));
        }
        if meta.layout != "row-major" {
            return Err(bad_meta(format!("unsupported layout {:?}", meta.layout)));
        }
        if meta.object_ids.len() != meta.n_objects {
            return Err(bad_meta(format!(
                "{} object ids for {} objects",
                meta.object_ids.len(),
                meta.n_objects
            )));
        }
        let bytes = io_util::read_bytes(&bin_path)?;
        let expected = meta.n_objects * meta.n_features;
        if bytes.len() % 4 != 0 || bytes.len() / 4 != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: bytes.len() / 4,
            });
        }
        let data: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let values = Array2::from_shape_vec((meta.n_objects, meta.n_features), data)
            .expect("length checked above");
        Self::build(values, meta.object_ids, opts.allow_raw)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let meta = FeatureMeta {
            n_objects: self.n_objects(),
            n_features: self.n_features(),
            dtype: "f32".into(),
            layout: "row-major".into(),
            object_ids: self.object_ids.clone(),
        };
        let mut bytes = Vec::with_capacity(self.values.len() * 4);
        for v in self.values.iter() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        io_util::write_atomic(&dir.join(FEATURES_FILE), &bytes)?;
        io_util::write_json(&dir.join(META_FILE), &meta)
    }
}

/// One odd-one-out judgment. The similar pair is stored with `pair_a < pair_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TripletRecord {
    pair_a: usize,
    pair_b: usize,
    odd: usize,
}

impl TripletRecord {
    pub fn new(pair_a: usize, pair_b: usize, odd: usize) -> Result<Self> {
        if pair_a == pair_b || pair_a == odd || pair_b == odd {
            return Err(Error::InvalidTriplet(
                pair_a,
                pair_b,
                odd,
                "indices must be distinct",
            ));
        }
        Ok(Self {
            pair_a: pair_a.min(pair_b),
            pair_b: pair_a.max(pair_b),
            odd,
        })
    }

    pub fn pair_a(&self) -> usize {
        self.pair_a
    }

    pub fn pair_b(&self) -> usize {
        self.pair_b
    }

    pub fn odd(&self) -> usize {
        self.odd
    }

    /// `[pair_a, pair_b, odd]`.
    pub fn objects(&self) -> [usize; 3] {
        [self.pair_a, self.pair_b, self.odd]
    }

    /// The three objects in ascending order, independent of the choice.
    pub fn sorted_objects(&self) -> [usize; 3] {
        let mut o = self.objects();
        o.sort_unstable();
        o
    }

    pub fn check_bounds(&self, n_objects: usize) -> Result<()> {
        if self.pair_b >= n_objects || self.odd >= n_objects {
            return Err(Error::InvalidTriplet(
                self.pair_a,
                self.pair_b,
                self.odd,
                "index out of range",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Simulated,
    Ingested,
}

/// How the three columns of an input triplet file map onto the judgment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColumnOrder {
    /// `pair pair odd`: the odd one out is the third column.
    #[default]
    PairPairOdd,
    /// `odd pair pair`: the odd one out is the first column.
    OddPairPair,
}

impl FromStr for ColumnOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pair-pair-odd" => Ok(ColumnOrder::PairPairOdd),
            "odd-pair-pair" => Ok(ColumnOrder::OddPairPair),
            other => Err(Error::invalid(format!(
                "unknown column order {other:?} (expected pair-pair-odd or odd-pair-pair)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripletDataset {
    pub records: Vec<TripletRecord>,
    pub n_objects: usize,
    pub provenance: Provenance,
}

impl TripletDataset {
    pub fn new(
        records: Vec<TripletRecord>,
        n_objects: usize,
        provenance: Provenance,
    ) -> Result<Self> {
        for r in &records {
            r.check_bounds(n_objects)?;
        }
        Ok(Self {
            records,
            n_objects,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Reads a whitespace-separated triplet file. Blank lines and lines
    /// starting with `#` are skipped. When `n_objects` is `None` it is inferred
    /// as the largest index plus one.
    pub fn load(path: &Path, order: ColumnOrder, n_objects: Option<usize>) -> Result<Self> {
        let text = io_util::read_to_string(path)?;
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut records = Vec::new();
        let mut max_index = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = [0usize; 3];
            let mut n = 0;
            for tok in line.split_whitespace() {
                if n == 3 {
                    return Err(parse_err(lineno + 1, "more than three columns".into()));
                }
                cols[n] = tok
                    .parse::<usize>()
                    .map_err(|e| parse_err(lineno + 1, format!("bad index {tok:?}: {e}")))?;
                n += 1;
            }
            if n != 3 {
                return Err(parse_err(
                    lineno + 1,
                    format!("expected 3 columns, found {n}"),
                ));
            }
            let (a, b, odd) = match order {
                ColumnOrder::PairPairOdd => (cols[0], cols[1], cols[2]),
                ColumnOrder::OddPairPair => (cols[1], cols[2], cols[0]),
            };
            let rec =
                TripletRecord::new(a, b, odd).map_err(|e| parse_err(lineno + 1, e.to_string()))?;
            if let Some(m) = n_objects {
                rec.check_bounds(m)
                    .map_err(|_| parse_err(lineno + 1, format!("index exceeds n_objects={m}")))?;
            }
            max_index = max_index.max(rec.pair_b).max(rec.odd);
            records.push(rec);
        }
        let n_objects = match n_objects {
            Some(m) => m,
            None if records.is_empty() => 0,
            None => max_index + 1,
        };
        Ok(Self {
            records,
            n_objects,
            provenance: Provenance::Ingested,
        })
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::with_capacity(self.records.len() * 16);
        for r in &self.records {
            use std::fmt::Write;
            let _ = writeln!(s, "{}\t{}\t{}", r.pair_a, r.pair_b, r.odd);
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io_util::write_atomic(path, self.to_tsv().as_bytes())
    }
}

/// Even-indexed objects first, odd-indexed second.
pub fn split_objects_odd_even(n_objects: usize) -> (Vec<usize>, Vec<usize>) {
    let even = (0..n_objects).step_by(2).collect();
    let odd = (1..n_objects).step_by(2).collect();
    (even, odd)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimensionLabel {
    Visual,
    Semantic,
    Mixed,
    Unclear,
}

impl DimensionLabel {
    pub const ALL: [DimensionLabel; 4] = [
        DimensionLabel::Visual,
        DimensionLabel::Semantic,
        DimensionLabel::Mixed,
        DimensionLabel::Unclear,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DimensionLabel::Visual => "visual",
            DimensionLabel::Semantic => "semantic",
            DimensionLabel::Mixed => "mixed",
            DimensionLabel::Unclear => "unclear",
        }
    }
}

impl fmt::Display for DimensionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DimensionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "visual" => Ok(DimensionLabel::Visual),
            "semantic" => Ok(DimensionLabel::Semantic),
            "mixed" => Ok(DimensionLabel::Mixed),
            "unclear" => Ok(DimensionLabel::Unclear),
            other => Err(Error::invalid(format!("unknown dimension label {other:?}"))),
        }
    }
}

/// Labels keyed by embedding column position. Missing entries read as `unclear`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DimensionLabelTable {
    labels: BTreeMap<usize, DimensionLabel>,
}

impl DimensionLabelTable {
    pub fn new(labels: BTreeMap<usize, DimensionLabel>, n_dims: usize) -> Result<Self> {
        if let Some((&idx, _)) = labels.iter().next_back() {
            if idx >= n_dims {
                return Err(Error::invalid(format!(
                    "label for dimension {idx} but embedding has {n_dims} dimensions"
                )));
            }
        }
        Ok(Self { labels })
    }

    /// Every dimension `0..n_dims` gets the same label.
    pub fn uniform(label: DimensionLabel, n_dims: usize) -> Self {
        Self {
            labels: (0..n_dims).map(|d| (d, label)).collect(),
        }
    }

    pub fn get(&self, dim: usize) -> DimensionLabel {
        self.labels
            .get(&dim)
            .copied()
            .unwrap_or(DimensionLabel::Unclear)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn load(path: &Path, n_dims: usize) -> Result<Self> {
        let text = io_util::read_to_string(path)?;
        let mut labels = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg,
            };
            let (idx, label) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected dimension_index<TAB>label".into()))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("bad dimension index {idx:?}: {e}")))?;
            let label: DimensionLabel =
                label.parse().map_err(|e: Error| parse_err(e.to_string()))?;
            if labels.insert(idx, label).is_some() {
                return Err(parse_err(format!("dimension {idx} labeled twice")));
            }
        }
        Self::new(labels, n_dims)
    }
}

/// A rectified point embedding: `n_objects x n_dims`, entrywise non-negative.
/// `dim_ids` records which columns of the originating model each column is.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEmbedding {
    values: Array2<f64>,
    dim_ids: Vec<usize>,
}

impl PointEmbedding {
    pub fn new(values: Array2<f64>, dim_ids: Vec<usize>) -> Result<Self> {
        if dim_ids.len() != values.ncols() {
            return Err(Error::ShapeMismatch {
                expected: values.ncols(),
                found: dim_ids.len(),
            });
        }
        for ((row, col), &v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
            if v < 0.0 {
                return Err(Error::Negative { row, col, value: v });
            }
        }
        Ok(Self {
            values: values.as_standard_layout().into_owned(),
            dim_ids,
        })
    }

    pub fn from_values(values: Array2<f64>) -> Result<Self> {
        let ids = (0..values.ncols()).collect();
        Self::new(values, ids)
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn dim_ids(&self) -> &[usize] {
        &self.dim_ids
    }

    pub fn n_objects(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_dims(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn load_tsv(path: &Path) -> Result<Self> {
        let (ids, values) = read_matrix_tsv(path)?;
        Self::new(values, ids)
    }

    pub fn save_tsv(&self, path: &Path) -> Result<()> {
        write_matrix_tsv(path, &self.dim_ids, self.values.view())
    }
}

/// Formats a header row of column ids followed by one row per object.
/// Values use the shortest representation that parses back to the same `f64`.
pub fn matrix_to_tsv(ids: &[usize], values: ArrayView2<'_, f64>) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let header: Vec<String> = ids.iter().map(|d| d.to_string()).collect();
    s.push_str(&header.join("\t"));
    s.push('\n');
    for row in values.rows() {
        let mut first = true;
        for v in row {
            if !first {
                s.push('\t');
            }
            first = false;
            let _ = write!(s, "{v}");
        }
        s.push('\n');
    }
    s
}

pub fn write_matrix_tsv(path: &Path, ids: &[usize], values: ArrayView2<'_, f64>) -> Result<()> {
    io_util::write_atomic(path, matrix_to_tsv(ids, values).as_bytes())
}

pub fn read_matrix_tsv(path: &Path) -> Result<(Vec<usize>, Array2<f64>)> {
    let text = io_util::read_to_string(path)?;
    let err = |line: usize, msg: String| Error::Parse {
        path: PathBuf::from(path),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    let ids: Vec<usize> = match lines.next() {
        Some((_, header)) if !header.trim().is_empty() => header
            .split('\t')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| err(1, format!("bad dimension id {t:?}: {e}")))
            })
            .collect::<Result<_>>()?,
        _ => Vec::new(),
    };
    let mut data = Vec::new();
    let mut rows = 0;
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for tok in line.split('\t') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|e| err(lineno + 1, format!("bad value {tok:?}: {e}")))?;
            data.push(v);
        }
        if data.len() - before != ids.len() {
            return Err(err(
                lineno + 1,
                format!(
                    "expected {} columns, found {}",
                    ids.len(),
                    data.len() - before
                ),
            ));
        }
        rows += 1;
    }
    let values = Array2::from_shape_vec((rows, ids.len()), data).expect("row widths checked");
    Ok((ids, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn write_dir(meta: &str, values: &[f32]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(META_FILE), meta).unwrap();
        let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        std::fs::write(dir.path().join(FEATURES_FILE), bytes).unwrap();
        dir
    }

    const META_3X2: &str = r#"{"n_objects": 3, "n_features": 2, "dtype": "f32", "layout": "row-major", "object_ids": ["a", "b", "c"]}"#;

    #[test]
    fn decodes_little_endian_rows() {
        let dir = write_dir(META_3X2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let fm = FeatureMatrix::load(dir.path(), LoadOptions::default()).unwrap();
        assert_eq!(fm.values(), array![[1.0f32, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        assert_eq!(fm.object_ids(), ["a", "b", "c"]);
        assert_eq!(fm.dot(0, 2), 1.0);
    }

    #[test]
    fn short_binary_is_shape_mismatch() {
        let dir = write_dir(META_3X2, &[1.0, 0.0, 0.0, 1.0, 1.0]);
        let err = FeatureMatrix::load(dir.path(), LoadOptions::default()).unwrap_err();
        assert!(
            matches!(
                err,
                Error::ShapeMismatch {
                    expected: 6,
                    found: 5
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn negative_rejected_unless_raw() {
        let dir = write_dir(META_3X2, &[1.0, -0.5, 0.0, 1.0, 1.0, 1.0]);
        let err = FeatureMatrix::load(dir.path(), LoadOptions::default()).unwrap_err();
        assert!(
            matches!(err, Error::Negative { row: 0, col: 1, .. }),
            "{err}"
        );
        let fm = FeatureMatrix::load(dir.path(), LoadOptions { allow_raw: true }).unwrap();
        assert_eq!(fm.values()[[0, 1]], 0.0);
    }

    #[test]
    fn distinct_diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            FeatureMatrix::load(dir.path(), LoadOptions::default()),
            Err(Error::MissingFile(_))
        ));
        let dir = write_dir(META_3X2, &[1.0, f32::NAN, 0.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            FeatureMatrix::load(dir.path(), LoadOptions::default()),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        let dup = META_3X2.replace(r#""c""#, r#""a""#);
        let dir = write_dir(&dup, &[1.0; 6]);
        assert!(matches!(
            FeatureMatrix::load(dir.path(), LoadOptions::default()),
            Err(Error::DuplicateId(id)) if id == "a"
        ));
        let f64_meta = META_3X2.replace("f32", "f64");
        let dir = write_dir(&f64_meta, &[1.0; 6]);
        assert!(matches!(
            FeatureMatrix::load(dir.path(), LoadOptions::default()),
            Err(Error::Metadata { .. })
        ));
    }

    #[test]
    fn triplet_canonicalization() {
        let t = TripletRecord::new(5, 2, 9).unwrap();
        assert_eq!(t.objects(), [2, 5, 9]);
        assert!(TripletRecord::new(5, 5, 9).is_err());
        let again = TripletRecord::new(t.pair_a(), t.pair_b(), t.odd()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn triplet_file_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.tsv");
        std::fs::write(&p, "5 2 9\n0\t1\t3\n\n# comment\n4\t3\t1\n").unwrap();
        let ds = TripletDataset::load(&p, ColumnOrder::PairPairOdd, None).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.n_objects, 10);
        assert_eq!(ds.provenance, Provenance::Ingested);
        assert_eq!(ds.records[0].objects(), [2, 5, 9]);

        let ds = TripletDataset::load(&p, ColumnOrder::OddPairPair, None).unwrap();
        assert_eq!(ds.records[0].objects(), [2, 9, 5]);

        std::fs::write(&p, "5 5 9\n").unwrap();
        assert!(matches!(
            TripletDataset::load(&p, ColumnOrder::PairPairOdd, None),
            Err(Error::Parse { line: 1, .. })
        ));
        std::fs::write(&p, "1 2 x\n").unwrap();
        assert!(TripletDataset::load(&p, ColumnOrder::PairPairOdd, None).is_err());
        std::fs::write(&p, "1 2 99999999999999999999999\n").unwrap();
        assert!(TripletDataset::load(&p, ColumnOrder::PairPairOdd, None).is_err());
        std::fs::write(&p, "1 2 7\n").unwrap();
        assert!(TripletDataset::load(&p, ColumnOrder::PairPairOdd, Some(5)).is_err());
    }

    #[test]
    fn odd_even_split() {
        assert_eq!(split_objects_odd_even(5), (vec![0, 2, 4], vec![1, 3]));
        assert_eq!(split_objects_odd_even(2), (vec![0], vec![1]));
        let (a, b) = split_objects_odd_even(1854);
        assert_eq!((a.len(), b.len()), (927, 927));
    }

    #[test]
    fn labels_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.tsv");
        std::fs::write(&p, "0\tvisual\n2\tSemantic\n").unwrap();
        let t = DimensionLabelTable::load(&p, 3).unwrap();
        assert_eq!(t.get(0), DimensionLabel::Visual);
        assert_eq!(t.get(1), DimensionLabel::Unclear);
        assert_eq!(t.get(2), DimensionLabel::Semantic);
        assert!(DimensionLabelTable::load(&p, 2).is_err());
        std::fs::write(&p, "0\tcolorful\n").unwrap();
        assert!(DimensionLabelTable::load(&p, 3).is_err());
    }

    proptest! {
        #[test]
        fn feature_matrix_round_trip(
            rows in 3usize..8,
            cols in 1usize..6,
            seed in proptest::collection::vec(0.0f32..1e6, 48),
        ) {
            let values = Array2::from_shape_fn((rows, cols), |(i, j)| seed[(i * cols + j) % seed.len()] / 7.0);
            let fm = FeatureMatrix::with_default_ids(values).unwrap();
            let dir = tempfile::tempdir().unwrap();
            fm.save(dir.path()).unwrap();
            let back = FeatureMatrix::load(dir.path(), LoadOptions::default()).unwrap();
            prop_assert_eq!(back, fm);
        }

        #[test]
        fn triplet_dataset_round_trip(raw in proptest::collection::vec((0usize..50, 0usize..50, 0usize..50), 0..40)) {
            let records: Vec<_> = raw.into_iter().filter_map(|(a, b, c)| TripletRecord::new(a, b, c).ok()).collect();
            let ds = TripletDataset::new(records, 50, Provenance::Simulated).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("t.tsv");
            ds.save(&p).unwrap();
            let back = TripletDataset::load(&p, ColumnOrder::PairPairOdd, Some(50)).unwrap();
            prop_assert_eq!(back.records, ds.records);
        }

        #[test]
        fn matrix_tsv_round_trip(vals in proptest::collection::vec(0.0f64..1e3, 12)) {
            let m = Array2::from_shape_vec((4, 3), vals).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("e.tsv");
            write_matrix_tsv(&p, &[7, 2, 9], m.view()).unwrap();
            let (ids, back) = read_matrix_tsv(&p).unwrap();
            prop_assert_eq!(ids, vec![7, 2, 9]);
            prop_assert_eq!(back, m);
        }
    }
}
