use std::path::Path;

use ndarray::Array2;

use super::{TrainLog, TrainedModel, VariationalEmbedding};
use crate::data::{read_matrix_tsv, write_matrix_tsv, PointEmbedding};
use crate::error::{Error, Result};
use crate::io_util;

pub const EMBEDDING_MU: &str = "embedding_mu.tsv";
pub const EMBEDDING_SIGMA: &str = "embedding_sigma.tsv";
pub const EMBEDDING_PRUNED: &str = "embedding_pruned.tsv";
pub const TRAIN_LOG: &str = "train_log.json";

/// Writes `embedding_mu.tsv`, `embedding_sigma.tsv` (all columns),
/// `embedding_pruned.tsv` (rectified mean, active columns in importance
/// order) and `train_log.json`.
pub fn save_model_dir(dir: &Path, model: &TrainedModel) -> Result<()> {
    let e = &model.embedding;
    let all: Vec<usize> = (0..e.n_dims()).collect();
    write_matrix_tsv(&dir.join(EMBEDDING_MU), &all, e.mu.view())?;
    write_matrix_tsv(&dir.join(EMBEDDING_SIGMA), &all, e.sigma().view())?;
    e.pruned_embedding().save_tsv(&dir.join(EMBEDDING_PRUNED))?;
    io_util::write_json(&dir.join(TRAIN_LOG), &model.log)
}

pub fn load_model_dir(dir: &Path) -> Result<TrainedModel> {
    let log: TrainLog = io_util::read_json(&dir.join(TRAIN_LOG))?;
    let (_, mu) = read_matrix_tsv(&dir.join(EMBEDDING_MU))?;
    let (_, sigma) = read_matrix_tsv(&dir.join(EMBEDDING_SIGMA))?;
    if sigma.iter().any(|&s| s <= 0.0 || !s.is_finite()) {
        return Err(Error::Metadata {
            path: dir.join(EMBEDDING_SIGMA),
            msg: "scales must be finite and positive".into(),
        });
    }
    let mut embedding = VariationalEmbedding::new(mu, sigma.mapv(f64::ln), log.prior)?;
    embedding.active_dims = log.active_dims.clone();
    embedding.seed = log.config.seed;
    embedding.n_train = log.n_train;
    Ok(TrainedModel { embedding, log })
}

/// `max(0, mu)` over every column of a model directory, pruned columns zero.
pub fn load_full_point_estimate(dir: &Path) -> Result<Array2<f64>> {
    let mu_path = dir.join(EMBEDDING_MU);
    let (ids, mu) = read_matrix_tsv(&mu_path)?;
    let log: TrainLog = io_util::read_json(&dir.join(TRAIN_LOG))?;
    if let Some(&bad) = log.active_dims.iter().find(|&&d| d >= ids.len()) {
        return Err(Error::Metadata {
            path: mu_path,
            msg: format!("active dimension {bad} out of range"),
        });
    }
    let mut out = Array2::zeros(mu.dim());
    for &d in &log.active_dims {
        out.column_mut(d).assign(&mu.column(d).mapv(|v| v.max(0.0)));
    }
    Ok(out)
}

impl PointEmbedding {
    /// Loads a point embedding from a model directory (`embedding_pruned.tsv`)
    /// or directly from a TSV file.
    pub fn load(path: &Path) -> Result<Self> {
        if path.is_dir() {
            Self::load_tsv(&path.join(EMBEDDING_PRUNED))
        } else {
            Self::load_tsv(path)
        }
    }
}
