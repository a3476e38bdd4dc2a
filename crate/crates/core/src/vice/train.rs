use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::elbo::elbo_core;
use super::prune::surviving;
use super::{PriorConfig, VariationalEmbedding};
use crate::data::{TripletDataset, TripletRecord};
use crate::error::{Error, Result};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub p_init: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop once the number of active dimensions has not changed for this many epochs.
    pub stability_window: usize,
    pub mc_samples: usize,
    pub learning_rate: f64,
    pub prune_every: usize,
    pub keep_prob_threshold: f64,
    pub min_objects: usize,
    pub seed: u64,
    pub val_fraction: f64,
    /// Initial means are drawn from `U(-s, s)`; `None` uses `s = 1 / sqrt(n_objects)`.
    pub init_mu_scale: Option<f64>,
    pub init_sigma: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            p_init: 150,
            batch_size: 1024,
            max_epochs: 1000,
            stability_window: 500,
            mc_samples: 1,
            learning_rate: 1e-3,
            prune_every: 1,
            keep_prob_threshold: 0.95,
            min_objects: 5,
            seed: 0,
            val_fraction: 0.1,
            init_mu_scale: None,
            init_sigma: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::invalid(msg.to_string()));
        if self.p_init == 0 {
            return bad("p_init must be at least 1");
        }
        if self.batch_size == 0
            || self.max_epochs == 0
            || self.prune_every == 0
            || self.mc_samples == 0
        {
            return bad("batch_size, max_epochs, prune_every and mc_samples must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return bad("val_fraction must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.keep_prob_threshold) {
            return bad("keep_prob_threshold must be a probability");
        }
        if !(self.init_sigma > 0.0 && self.init_mu_scale.is_none_or(|s| s >= 0.0)) {
            return bad("init_sigma must be positive and init_mu_scale non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub complexity: f64,
    pub log_likelihood: f64,
    pub val_accuracy: Option<f64>,
    pub n_active: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Stable,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub config: TrainConfig,
    pub prior: PriorConfig,
    pub n_objects: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub stop_reason: StopReason,
    pub epochs_run: usize,
    pub active_dims: Vec<usize>,
    pub final_val_accuracy: Option<f64>,
    pub epochs: Vec<EpochRecord>,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub embedding: VariationalEmbedding,
    pub log: TrainLog,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, t: u64) {
        let c1 = 1.0 - Self::BETA1.powf(t as f64);
        let c2 = 1.0 - Self::BETA2.powf(t as f64);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }

    fn keep_columns(&mut self, m: usize, q: usize, keep: &[usize]) {
        self.m = select_columns(&self.m, m, q, keep);
        self.v = select_columns(&self.v, m, q, keep);
    }
}

fn select_columns(data: &[f64], m: usize, q: usize, keep: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(m * keep.len());
    for i in 0..m {
        out.extend(keep.iter().map(|&c| data[i * q + c]));
    }
    out
}

/// Expected held-out accuracy of the rectified mean; ties split credit evenly.
fn choice_accuracy(w_plus: &[f64], q: usize, triplets: &[TripletRecord]) -> f64 {
    let mut correct = 0.0;
    for t in triplets {
        let [a, b, o] = t.objects();
        let (wa, wb, wo) = (
            &w_plus[a * q..(a + 1) * q],
            &w_plus[b * q..(b + 1) * q],
            &w_plus[o * q..(o + 1) * q],
        );
        let mut d = [0.0; 3];
        for k in 0..q {
            d[0] += wa[k] * wb[k];
            d[1] += wa[k] * wo[k];
            d[2] += wb[k] * wo[k];
        }
        let max = d[0].max(d[1]).max(d[2]);
        if d[0] == max {
            correct += 1.0 / d.iter().filter(|&&x| x == max).count() as f64;
        }
    }
    correct / triplets.len() as f64
}

/// Fits the variational embedding. A run is sequential and bit-for-bit
/// reproducible for a fixed `cfg.seed`.
pub fn train(
    dataset: &TripletDataset,
    cfg: &TrainConfig,
    prior: &PriorConfig,
) -> Result<TrainedModel> {
    cfg.validate()?;
    if !(prior.pi > 0.0
        && prior.pi < 1.0
        && prior.sigma_spike > 0.0
        && prior.sigma_slab >= prior.sigma_spike)
    {
        prior.validate()?;
    }
    if dataset.len() < cfg.batch_size {
        return Err(Error::invalid(format!(
            "dataset has {} triplets, fewer than the batch size {}",
            dataset.len(),
            cfg.batch_size
        )));
    }
    let m = dataset.n_objects;
    let p = cfg.p_init;

    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut substream(cfg.seed, "split", 0));
    let n_val = (cfg.val_fraction * dataset.len() as f64).floor() as usize;
    let val: Vec<TripletRecord> = order[..n_val].iter().map(|&i| dataset.records[i]).collect();
    let mut train_set: Vec<TripletRecord> =
        order[n_val..].iter().map(|&i| dataset.records[i]).collect();
    if train_set.is_empty() {
        return Err(Error::invalid(
            "no training triplets left after the validation split",
        ));
    }
    let n_train = train_set.len();

    let mut init_rng = substream(cfg.seed, "init", 0);
    let scale = cfg.init_mu_scale.unwrap_or(1.0 / (m as f64).sqrt());
    let mut full_mu =
        Array2::from_shape_simple_fn((m, p), || scale * (2.0 * init_rng.random::<f64>() - 1.0));
    let mut full_ls = Array2::from_elem((m, p), cfg.init_sigma.ln());

    let mut active: Vec<usize> = (0..p).collect();
    let mut q = p;
    let mut mu: Vec<f64> = full_mu.iter().copied().collect();
    let mut ls: Vec<f64> = full_ls.iter().copied().collect();
    let mut adam_mu = Adam::new(m * q);
    let mut adam_ls = Adam::new(m * q);

    let mut epochs = Vec::new();
    let mut last_change = 0usize;
    let mut step: u64 = 0;
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 1..=cfg.max_epochs {
        train_set.shuffle(&mut substream(cfg.seed, "shuffle", epoch as u64));
        let mut mc_rng = substream(cfg.seed, "mc", epoch as u64);
        let (mut loss_sum, mut cx_sum, mut ll_sum, mut n_batches) = (0.0, 0.0, 0.0, 0usize);

        for batch in train_set.chunks(cfg.batch_size) {
            let noise: Vec<Array2<f64>> = (0..cfg.mc_samples)
                .map(|_| Array2::from_shape_simple_fn((m, q), || mc_rng.sample(StandardNormal)))
                .collect();
            let views: Vec<_> = noise.iter().map(|n| n.view()).collect();
            let mu_view = ndarray::ArrayView2::from_shape((m, q), &mu).expect("shape");
            let ls_view = ndarray::ArrayView2::from_shape((m, q), &ls).expect("shape");
            let terms = elbo_core(batch, mu_view, ls_view, prior, n_train, &views, 1.0);
            if !terms.loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    msg: format!("loss became {} at step {}", terms.loss, step + 1),
                });
            }
            step += 1;
            adam_mu.step(
                &mut mu,
                terms.grad_mu.as_slice().expect("standard"),
                cfg.learning_rate,
                step,
            );
            adam_ls.step(
                &mut ls,
                terms.grad_log_sigma.as_slice().expect("standard"),
                cfg.learning_rate,
                step,
            );
            loss_sum += terms.loss;
            cx_sum += terms.complexity;
            ll_sum += terms.log_likelihood;
            n_batches += 1;
        }
        if mu.iter().chain(&ls).any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                msg: "non-finite variational parameters".into(),
            });
        }

        if epoch % cfg.prune_every == 0 {
            let mu_view = ndarray::ArrayView2::from_shape((m, q), &mu).expect("shape");
            let ls_view = ndarray::ArrayView2::from_shape((m, q), &ls).expect("shape");
            let all: Vec<usize> = (0..q).collect();
            let mut keep = surviving(
                mu_view,
                ls_view,
                &all,
                cfg.keep_prob_threshold,
                cfg.min_objects,
            );
            if keep.len() < q {
                keep.sort_unstable();
                write_back(&mut full_mu, &mut full_ls, &active, &mu, &ls);
                for (c, &d) in active.iter().enumerate() {
                    if keep.binary_search(&c).is_err() {
                        full_mu.column_mut(d).fill(0.0);
                    }
                }
                mu = select_columns(&mu, m, q, &keep);
                ls = select_columns(&ls, m, q, &keep);
                adam_mu.keep_columns(m, q, &keep);
                adam_ls.keep_columns(m, q, &keep);
                active = keep.iter().map(|&c| active[c]).collect();
                q = active.len();
                last_change = epoch;
            }
        }

        let val_accuracy = (!val.is_empty()).then(|| {
            let w_plus: Vec<f64> = mu.iter().map(|v| v.max(0.0)).collect();
            choice_accuracy(&w_plus, q, &val)
        });
        let nb = n_batches as f64;
        epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / nb,
            complexity: cx_sum / nb,
            log_likelihood: ll_sum / nb,
            val_accuracy,
            n_active: q,
        });

        if epoch - last_change >= cfg.stability_window {
            stop_reason = StopReason::Stable;
            break;
        }
    }

    write_back(&mut full_mu, &mut full_ls, &active, &mu, &ls);
    let mut embedding = VariationalEmbedding {
        mu: full_mu,
        log_sigma: full_ls,
        active_dims: active.clone(),
        prior: *prior,
        seed: cfg.seed,
        n_train,
    };
    let final_dims = super::prune_dimensions(&embedding, cfg.keep_prob_threshold, cfg.min_objects);
    for &d in &active {
        if !final_dims.contains(&d) {
            embedding.mu.column_mut(d).fill(0.0);
        }
    }
    embedding.active_dims = final_dims;

    let final_val_accuracy = (!val.is_empty()).then(|| {
        let w = embedding.pruned_embedding().into_values();
        let q = w.ncols();
        choice_accuracy(w.as_slice().expect("standard"), q, &val)
    });
    let log = TrainLog {
        config: cfg.clone(),
        prior: *prior,
        n_objects: m,
        n_train,
        n_val,
        stop_reason,
        epochs_run: epochs.len(),
        active_dims: embedding.active_dims.clone(),
        final_val_accuracy,
        epochs,
    };
    Ok(TrainedModel { embedding, log })
}

fn write_back(
    full_mu: &mut Array2<f64>,
    full_ls: &mut Array2<f64>,
    active: &[usize],
    mu: &[f64],
    ls: &[f64],
) {
    let q = active.len();
    for (i, (mut mrow, mut lrow)) in full_mu
        .axis_iter_mut(Axis(0))
        .zip(full_ls.axis_iter_mut(Axis(0)))
        .enumerate()
    {
        for (c, &d) in active.iter().enumerate() {
            mrow[d] = mu[i * q + c];
            lrow[d] = ls[i * q + c];
        }
    }
}
