//! Ground-truth sparse non-negative embeddings for recovery experiments.

use ndarray::Array2;
use rand::Rng;

use crate::data::FeatureMatrix;
use crate::error::Result;
use crate::rng::substream;

#[derive(Debug, Clone, Copy)]
pub struct SparseTruth {
    pub n_objects: usize,
    pub n_dims: usize,
    /// Probability that an entry is non-zero.
    pub density: f64,
    pub min_value: f64,
    pub max_value: f64,
}

impl Default for SparseTruth {
    fn default() -> Self {
        Self {
            n_objects: 200,
            n_dims: 10,
            density: 0.3,
            min_value: 0.5,
            max_value: 2.0,
        }
    }
}

impl SparseTruth {
    /// Each entry is non-zero with probability `density`, uniform on
    /// `[min_value, max_value]` when it is. Every object gets at least one
    /// non-zero entry. Values are rounded to `f32` so the matrix survives a
    /// trip through the feature file format unchanged.
    pub fn generate(&self, seed: u64) -> Array2<f64> {
        let mut rng = substream(seed, "synthetic", 0);
        let mut w = Array2::zeros((self.n_objects, self.n_dims));
        for mut row in w.rows_mut() {
            for v in row.iter_mut() {
                if rng.random::<f64>() < self.density {
                    *v = rng.random_range(self.min_value..=self.max_value) as f32 as f64;
                }
            }
            if row.iter().all(|&v| v == 0.0) {
                let d = rng.random_range(0..self.n_dims);
                row[d] = rng.random_range(self.min_value..=self.max_value) as f32 as f64;
            }
        }
        w
    }

    pub fn features(&self, seed: u64) -> Result<FeatureMatrix> {
        FeatureMatrix::with_default_ids(self.generate(seed).mapv(|v| v as f32))
    }
}
