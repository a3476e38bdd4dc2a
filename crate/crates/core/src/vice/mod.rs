//! Variational embedding of triplet behavior with a spike-and-slab prior.
//!
//! The posterior over the `m x p` embedding is a fully factorized Gaussian
//! with mean `mu` and scale `exp(log_sigma)`. Samples are rectified before
//! they enter the likelihood, and the final point estimate is `max(0, mu)`
//! restricted to the dimensions that survive pruning.

mod elbo;
mod io;
mod prior;
mod prune;
mod train;

pub use elbo::{
    complexity_terms, elbo_terms, elbo_terms_with_noise, triplet_log_likelihood, ElboTerms,
};
pub use io::{
    load_full_point_estimate, load_model_dir, save_model_dir, EMBEDDING_MU, EMBEDDING_PRUNED,
    EMBEDDING_SIGMA, TRAIN_LOG,
};
pub use prior::PriorConfig;
pub use prune::{keep_probability, prune_dimensions};
pub use train::{train, EpochRecord, StopReason, TrainConfig, TrainLog, TrainedModel};

use ndarray::{Array2, Axis};

use crate::data::PointEmbedding;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalEmbedding {
    pub mu: Array2<f64>,
    pub log_sigma: Array2<f64>,
    /// Surviving columns, most important first.
    pub active_dims: Vec<usize>,
    pub prior: PriorConfig,
    pub seed: u64,
    pub n_train: usize,
}

impl VariationalEmbedding {
    pub fn new(mu: Array2<f64>, log_sigma: Array2<f64>, prior: PriorConfig) -> Result<Self> {
        if mu.dim() != log_sigma.dim() {
            return Err(Error::invalid(format!(
                "mu is {:?} but log_sigma is {:?}",
                mu.dim(),
                log_sigma.dim()
            )));
        }
        if log_sigma
            .iter()
            .any(|v| !v.exp().is_finite() || v.exp() <= 0.0)
        {
            return Err(Error::invalid(
                "log_sigma must map to finite positive scales",
            ));
        }
        let active_dims = (0..mu.ncols()).collect();
        Ok(Self {
            mu,
            log_sigma,
            active_dims,
            prior,
            seed: 0,
            n_train: 0,
        })
    }

    pub fn n_objects(&self) -> usize {
        self.mu.nrows()
    }

    pub fn n_dims(&self) -> usize {
        self.mu.ncols()
    }

    pub fn sigma(&self) -> Array2<f64> {
        self.log_sigma.mapv(f64::exp)
    }

    /// `max(0, mu)` over all columns, with pruned columns set to zero.
    pub fn point_estimate(&self) -> Array2<f64> {
        let mut out = Array2::zeros(self.mu.dim());
        for &d in &self.active_dims {
            out.column_mut(d)
                .assign(&self.mu.column(d).mapv(|v| v.max(0.0)));
        }
        out
    }

    /// Rectified mean restricted to active dimensions, in importance order.
    pub fn pruned_embedding(&self) -> PointEmbedding {
        let values = self
            .mu
            .select(Axis(1), &self.active_dims)
            .mapv(|v| v.max(0.0));
        PointEmbedding::new(values, self.active_dims.clone()).expect("rectified mean is valid")
    }
}
