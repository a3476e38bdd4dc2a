//! Ridge regression from raw features to embedding dimensions.
//!
//! Each dimension gets its own penalty, picked by k-fold cross-validation.
//! Fitted weights are exported as a little-endian f32 matrix plus a JSON
//! sidecar so other tools can compose them with a feature extractor.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util::{read_bytes, read_json, write_atomic, write_json};
use crate::rng::substream;

pub const WEIGHTS_FILE: &str = "ridge_weights.bin";
pub const META_FILE: &str = "ridge_meta.json";

/// `1e-3, 1e-2, ..., 1e4`.
pub fn default_lambda_grid() -> Vec<f64> {
    (-3..=4).map(|e| 10f64.powi(e)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub weights: Array1<f64>,
    pub intercept: f64,
}

impl RidgeFit {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        x.dot(&self.weights) + self.intercept
    }
}

/// In-place lower Cholesky factor. Pivots below a relative tolerance count
/// as singular.
fn cholesky(a: &mut Array2<f64>) -> Result<()> {
    let d = a.nrows();
    let scale = a.diag().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let tol = scale * 1e-13 * d.max(1) as f64;
    for j in 0..d {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= a[[j, k]] * a[[j, k]];
        }
        if diag.is_nan() || diag <= tol {
            return Err(Error::Singular(format!(
                "normal equations are not positive definite at column {j}; add a positive lambda"
            )));
        }
        let l = diag.sqrt();
        a[[j, j]] = l;
        for i in j + 1..d {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= a[[i, k]] * a[[j, k]];
            }
            a[[i, j]] = s / l;
        }
    }
    Ok(())
}

fn cholesky_solve(l: &Array2<f64>, b: &mut [f64]) {
    let d = l.nrows();
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * b[k];
        }
        b[i] = s / l[[i, i]];
    }
    for i in (0..d).rev() {
        let mut s = b[i];
        for k in i + 1..d {
            s -= l[[k, i]] * b[k];
        }
        b[i] = s / l[[i, i]];
    }
}

/// Centered design: column means and the Gram matrix of the centered data.
struct Design {
    x_mean: Array1<f64>,
    xc: Array2<f64>,
    gram: Array2<f64>,
}

impl Design {
    fn new(x: ArrayView2<'_, f64>) -> Self {
        let x_mean = x.mean_axis(Axis(0)).expect("at least one row");
        let xc = &x - &x_mean;
        let gram = xc.t().dot(&xc);
        Self { x_mean, xc, gram }
    }

    /// Weights and intercepts for every column of `y` at one penalty.
    fn solve(&self, y: ArrayView2<'_, f64>, lambda: f64) -> Result<(Array2<f64>, Array1<f64>)> {
        let mut a = self.gram.clone();
        a.diag_mut().mapv_inplace(|v| v + lambda);
        cholesky(&mut a)?;
        let y_mean = y.mean_axis(Axis(0)).expect("at least one row");
        let yc = &y - &y_mean;
        let rhs = self.xc.t().dot(&yc);
        let mut w = Array2::zeros(rhs.raw_dim());
        for (c, col) in rhs.axis_iter(Axis(1)).enumerate() {
            let mut b = col.to_vec();
            cholesky_solve(&a, &mut b);
            w.column_mut(c).assign(&Array1::from(b));
        }
        let intercepts = &y_mean - &self.x_mean.dot(&w);
        Ok((w, intercepts))
    }
}

fn check_inputs(x: ArrayView2<'_, f64>, n_y: usize, lambda: f64) -> Result<()> {
    let (n, d) = x.dim();
    if n != n_y {
        return Err(Error::Incompatible(format!(
            "expected {n} targets, found {n_y}"
        )));
    }
    if n < 2 {
        return Err(Error::invalid("ridge regression needs at least 2 samples"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!(
            "lambda must be finite and non-negative, got {lambda}"
        )));
    }
    if d > n && lambda == 0.0 {
        return Err(Error::invalid(format!(
            "lambda must be positive when features ({d}) outnumber samples ({n})"
        )));
    }
    Ok(())
}

/// Solves `(XcᵀXc + λI) w = Xcᵀyc` on column-centered data.
pub fn fit_ridge(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, lambda: f64) -> Result<RidgeFit> {
    check_inputs(x, y.len(), lambda)?;
    let design = Design::new(x);
    let y2 = y.insert_axis(Axis(1));
    let (w, b) = design.solve(y2, lambda)?;
    Ok(RidgeFit {
        weights: w.column(0).to_owned(),
        intercept: b[0],
    })
}

/// `1 - SS_res / SS_tot`.
pub fn r2_score(y_true: ArrayView1<'_, f64>, y_pred: ArrayView1<'_, f64>) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Incompatible(format!(
            "expected {} predictions, found {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.len() < 2 {
        return Err(Error::invalid("R² needs at least 2 values"));
    }
    let mean = y_true.mean().expect("non-empty");
    let ss_tot: f64 = y_true.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot <= 0.0 {
        return Err(Error::ZeroVariance(
            "R² is undefined for a constant target".into(),
        ));
    }
    let ss_res: f64 = y_true
        .iter()
        .zip(&y_pred)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeCvConfig {
    pub lambdas: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
}

impl Default for RidgeCvConfig {
    fn default() -> Self {
        Self {
            lambdas: default_lambda_grid(),
            folds: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeMeta {
    pub n_features: usize,
    pub n_dims: usize,
    pub dtype: String,
    pub layout: String,
    pub dim_ids: Vec<usize>,
    pub intercepts: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Out-of-fold R² at the chosen lambda; `None` for constant targets.
    pub r2_heldout: Vec<Option<f64>>,
    pub r2_in_sample: Vec<Option<f64>>,
    pub lambda_grid: Vec<f64>,
    /// Mean squared out-of-fold error, one row per dimension, one entry per grid value.
    pub cv_mse: Vec<Vec<f64>>,
    pub folds: usize,
}

/// One ridge model per embedding dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModelSet {
    /// `n_features x n_dims`.
    pub weights: Array2<f64>,
    pub meta: RidgeMeta,
}

impl RidgeModelSet {
    pub fn n_features(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_dims(&self) -> usize {
        self.weights.ncols()
    }

    pub fn predict_raw(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if x.len() != self.n_features() {
            return Err(Error::Incompatible(format!(
                "expected {} features, found {}",
                self.n_features(),
                x.len()
            )));
        }
        Ok(x.dot(&self.weights) + &Array1::from(self.meta.intercepts.clone()))
    }

    /// Affine prediction rectified at zero.
    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        Ok(self.predict_raw(x)?.mapv(|v| v.max(0.0)))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut bytes = Vec::with_capacity(self.weights.len() * 4);
        for v in self.weights.iter() {
            bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        write_atomic(&dir.join(WEIGHTS_FILE), &bytes)?;
        write_json(&dir.join(META_FILE), &self.meta)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join(META_FILE);
        let meta: RidgeMeta = read_json(&meta_path)?;
        let bad = |msg: String| Error::Metadata {
            path: meta_path.clone(),
            msg,
        };
        if meta.dtype != "f32" || meta.layout != "row-major" {
            return Err(bad(format!(
                "unsupported dtype/layout {}/{}",
                meta.dtype, meta.layout
            )));
        }
        let p = meta.n_dims;
        if [
            meta.intercepts.len(),
            meta.lambdas.len(),
            meta.dim_ids.len(),
        ]
        .iter()
        .any(|&l| l != p)
        {
            return Err(bad("per-dimension fields disagree with n_dims".into()));
        }
        let bytes = read_bytes(&dir.join(WEIGHTS_FILE))?;
        let want = meta.n_features * p * 4;
        if bytes.len() != want {
            return Err(Error::Incompatible(format!(
                "expected {want} bytes for {}x{} f32 weights, found {} bytes",
                meta.n_features,
                p,
                bytes.len()
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        let weights = Array2::from_shape_vec((meta.n_features, p), values).expect("length checked");
        Ok(Self { weights, meta })
    }
}

pub fn predict_dimensions(models: &RidgeModelSet, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    models.predict(x)
}

/// Fold index for every sample; fold sizes differ by at most one.
fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(seed, "folds", 0));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

/// Fits every column of `y` on `x`, choosing lambda per column by k-fold
/// cross-validation.
pub fn fit_ridge_cv(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    dim_ids: &[usize],
    cfg: &RidgeCvConfig,
) -> Result<RidgeModelSet> {
    let (n, d) = x.dim();
    let p = y.ncols();
    if dim_ids.len() != p {
        return Err(Error::Incompatible(format!(
            "expected {p} dimension ids, found {}",
            dim_ids.len()
        )));
    }
    if cfg.lambdas.is_empty() {
        return Err(Error::invalid("lambda grid is empty"));
    }
    for &l in &cfg.lambdas {
        check_inputs(x, y.nrows(), l)?;
    }
    if cfg.folds < 2 || cfg.folds > n {
        return Err(Error::invalid(format!(
            "fold count {} must lie between 2 and the sample count {n}",
            cfg.folds
        )));
    }
    let fold = fold_assignment(n, cfg.folds, cfg.seed);
    let n_l = cfg.lambdas.len();

    // Squared out-of-fold error per (fold, lambda), one entry per dimension.
    let jobs: Vec<(usize, usize)> = (0..cfg.folds)
        .flat_map(|f| (0..n_l).map(move |l| (f, l)))
        .collect();
    let designs: Vec<(Vec<usize>, Vec<usize>, Design)> = (0..cfg.folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| fold[i] != f).collect();
            let test: Vec<usize> = (0..n).filter(|&i| fold[i] == f).collect();
            let design = Design::new(x.select(Axis(0), &train).view());
            (train, test, design)
        })
        .collect();
    if d > designs.iter().map(|t| t.0.len()).min().unwrap_or(0) && cfg.lambdas.contains(&0.0) {
        return Err(Error::invalid(
            "lambda 0 is not allowed when features outnumber training samples",
        ));
    }
    let sse: Vec<Array1<f64>> = jobs
        .par_iter()
        .map(|&(f, l)| {
            let (train, test, design) = &designs[f];
            let (w, b) = design.solve(y.select(Axis(0), train).view(), cfg.lambdas[l])?;
            let pred = x.select(Axis(0), test).dot(&w) + &b;
            let resid = &y.select(Axis(0), test) - &pred;
            Ok(resid.mapv(|v| v * v).sum_axis(Axis(0)))
        })
        .collect::<Result<_>>()?;

    let mut total = Array2::<f64>::zeros((p, n_l));
    for (&(_, l), s) in jobs.iter().zip(&sse) {
        let mut col = total.column_mut(l);
        col += s;
    }
    let chosen: Vec<usize> = (0..p)
        .map(|c| {
            let row = total.row(c);
            (0..n_l).fold(0, |best, l| if row[l] < row[best] { l } else { best })
        })
        .collect();

    let full = Design::new(x);
    let mut weights = Array2::zeros((d, p));
    let mut intercepts = vec![0.0; p];
    let mut distinct: Vec<usize> = chosen.clone();
    distinct.sort_unstable();
    distinct.dedup();
    for l in distinct {
        let cols: Vec<usize> = (0..p).filter(|&c| chosen[c] == l).collect();
        let (w, b) = full.solve(y.select(Axis(1), &cols).view(), cfg.lambdas[l])?;
        for (k, &c) in cols.iter().enumerate() {
            weights.column_mut(c).assign(&w.column(k));
            intercepts[c] = b[k];
        }
    }

    let fitted = x.dot(&weights) + &Array1::from(intercepts.clone());
    let mut r2_in_sample = Vec::with_capacity(p);
    let mut r2_heldout = Vec::with_capacity(p);
    for c in 0..p {
        let yc = y.column(c);
        let mean = yc.mean().expect("non-empty");
        let ss_tot: f64 = yc.iter().map(|v| (v - mean).powi(2)).sum();
        if ss_tot > 0.0 {
            r2_in_sample.push(Some(r2_score(yc, fitted.column(c))?));
            r2_heldout.push(Some(1.0 - total[[c, chosen[c]]] / ss_tot));
        } else {
            r2_in_sample.push(None);
            r2_heldout.push(None);
        }
    }

    let meta = RidgeMeta {
        n_features: d,
        n_dims: p,
        dtype: "f32".into(),
        layout: "row-major".into(),
        dim_ids: dim_ids.to_vec(),
        intercepts,
        lambdas: chosen.iter().map(|&l| cfg.lambdas[l]).collect(),
        r2_heldout,
        r2_in_sample,
        lambda_grid: cfg.lambdas.clone(),
        cv_mse: total
            .axis_iter(Axis(0))
            .map(|r| r.iter().map(|v| v / n as f64).collect())
            .collect(),
        folds: cfg.folds,
    };
    Ok(RidgeModelSet { weights, meta })
}
