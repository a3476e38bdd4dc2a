use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{PriorConfig, VariationalEmbedding};
use crate::choice::log_chosen_probability;
use crate::data::TripletRecord;

/// `0.5 * ln(2 * pi * e)`, the per-entry constant of a Gaussian's negative entropy.
const HALF_LN_2PI_E: f64 = 1.418_938_533_204_672_7;

/// Stochastic estimate of the objective and its gradients.
#[derive(Debug, Clone)]
pub struct ElboTerms {
    /// `complexity - log_likelihood`, the quantity being minimized.
    pub loss: f64,
    /// `(E[log q(W)] - log p(W)) / n_total`, entropy in closed form, prior by
    /// Monte Carlo.
    pub complexity: f64,
    /// Mean log-likelihood of the batch under rectified samples.
    pub log_likelihood: f64,
    pub grad_mu: Array2<f64>,
    pub grad_log_sigma: Array2<f64>,
}

/// Log-probability of the recorded pair under a non-negative embedding.
pub fn triplet_log_likelihood(w: ArrayView2<'_, f64>, t: &TripletRecord) -> f64 {
    let [a, b, o] = t.objects();
    let (wa, wb, wo) = (w.row(a), w.row(b), w.row(o));
    log_chosen_probability([wa.dot(&wb), wa.dot(&wo), wb.dot(&wo)])
}

/// Draws `mc_samples` noise matrices for the active columns and evaluates the
/// objective. Gradients for pruned columns are zero.
pub fn elbo_terms<R: Rng + ?Sized>(
    batch: &[TripletRecord],
    params: &VariationalEmbedding,
    prior: &PriorConfig,
    n_total: usize,
    mc_samples: usize,
    rng: &mut R,
) -> ElboTerms {
    assert!(!batch.is_empty(), "elbo_terms: empty batch");
    let m = params.n_objects();
    let q = params.active_dims.len();
    let noise: Vec<Array2<f64>> = (0..mc_samples.max(1))
        .map(|_| Array2::from_shape_simple_fn((m, q), || rng.sample(StandardNormal)))
        .collect();
    let views: Vec<_> = noise.iter().map(|n| n.view()).collect();
    let mu = params.mu.select(Axis(1), &params.active_dims);
    let ls = params.log_sigma.select(Axis(1), &params.active_dims);
    let compact = elbo_core(batch, mu.view(), ls.view(), prior, n_total, &views, 1.0);
    scatter(compact, params)
}

/// Same objective at fixed noise, one `m x p` matrix per Monte-Carlo sample.
/// Noise entries in pruned columns are ignored.
pub fn elbo_terms_with_noise(
    batch: &[TripletRecord],
    params: &VariationalEmbedding,
    prior: &PriorConfig,
    n_total: usize,
    noise: &[Array2<f64>],
) -> ElboTerms {
    let mu = params.mu.select(Axis(1), &params.active_dims);
    let ls = params.log_sigma.select(Axis(1), &params.active_dims);
    let noise: Vec<Array2<f64>> = noise
        .iter()
        .map(|n| n.select(Axis(1), &params.active_dims))
        .collect();
    let views: Vec<_> = noise.iter().map(|n| n.view()).collect();
    let compact = elbo_core(batch, mu.view(), ls.view(), prior, n_total, &views, 1.0);
    scatter(compact, params)
}

/// Only the complexity part of the objective (no likelihood).
pub fn complexity_terms(
    params: &VariationalEmbedding,
    prior: &PriorConfig,
    n_total: usize,
    noise: &[Array2<f64>],
) -> ElboTerms {
    let mu = params.mu.select(Axis(1), &params.active_dims);
    let ls = params.log_sigma.select(Axis(1), &params.active_dims);
    let noise: Vec<Array2<f64>> = noise
        .iter()
        .map(|n| n.select(Axis(1), &params.active_dims))
        .collect();
    let views: Vec<_> = noise.iter().map(|n| n.view()).collect();
    let compact = elbo_core(&[], mu.view(), ls.view(), prior, n_total, &views, 0.0);
    scatter(compact, params)
}

fn scatter(compact: ElboTerms, params: &VariationalEmbedding) -> ElboTerms {
    let mut grad_mu = Array2::zeros(params.mu.dim());
    let mut grad_log_sigma = Array2::zeros(params.mu.dim());
    for (c, &d) in params.active_dims.iter().enumerate() {
        grad_mu.column_mut(d).assign(&compact.grad_mu.column(c));
        grad_log_sigma
            .column_mut(d)
            .assign(&compact.grad_log_sigma.column(c));
    }
    ElboTerms {
        grad_mu,
        grad_log_sigma,
        ..compact
    }
}

/// Objective on compact `m x q` parameter matrices.
///
/// For each noise sample `eps`, `W = mu + exp(log_sigma) * eps`; the prior is
/// evaluated on `W`, the likelihood on `max(0, W)`. Gradients are exact for
/// the given noise: clipped entries pass no likelihood gradient.
pub(crate) fn elbo_core(
    batch: &[TripletRecord],
    mu: ArrayView2<'_, f64>,
    log_sigma: ArrayView2<'_, f64>,
    prior: &PriorConfig,
    n_total: usize,
    noise: &[ArrayView2<'_, f64>],
    likelihood_weight: f64,
) -> ElboTerms {
    let (m, q) = mu.dim();
    let inv_n = 1.0 / n_total as f64;
    let n_samples = noise.len().max(1);
    let inv_s = 1.0 / n_samples as f64;
    let mu = mu.as_standard_layout();
    let log_sigma = log_sigma.as_standard_layout();
    let mu_s = mu.as_slice().expect("standard layout");
    let ls_s = log_sigma.as_slice().expect("standard layout");
    let sigma: Vec<f64> = ls_s.iter().map(|v| v.exp()).collect();

    let neg_entropy: f64 = ls_s.iter().map(|&l| -l - HALF_LN_2PI_E).sum();

    let mut grad_mu = vec![0.0; m * q];
    let mut grad_ls = vec![-inv_n; m * q];
    let mut log_prior_total = 0.0;
    let mut log_lik_total = 0.0;

    let mut w = vec![0.0; m * q];
    let mut w_plus = vec![0.0; m * q];
    let mut g_prior = vec![0.0; m * q];
    let mut g_lik = vec![0.0; m * q];
    let batch_scale = if batch.is_empty() {
        0.0
    } else {
        likelihood_weight / batch.len() as f64
    };

    for eps in noise {
        let eps = eps.as_standard_layout();
        let eps = eps.as_slice().expect("standard layout");
        let mut log_prior = 0.0;
        for e in 0..m * q {
            let we = mu_s[e] + sigma[e] * eps[e];
            w[e] = we;
            w_plus[e] = we.max(0.0);
            let (lp, g) = prior.log_density_and_grad(we);
            log_prior += lp;
            g_prior[e] = g;
        }
        log_prior_total += log_prior;

        g_lik.iter_mut().for_each(|v| *v = 0.0);
        let mut log_lik = 0.0;
        for t in batch {
            let [a, b, o] = t.objects();
            let wa = &w_plus[a * q..(a + 1) * q];
            let wb = &w_plus[b * q..(b + 1) * q];
            let wo = &w_plus[o * q..(o + 1) * q];
            let mut dots = [0.0; 3];
            for d in 0..q {
                dots[0] += wa[d] * wb[d];
                dots[1] += wa[d] * wo[d];
                dots[2] += wb[d] * wo[d];
            }
            log_lik += log_chosen_probability(dots);
            let p = crate::choice::pair_probabilities(dots);
            // d(-log p_ab)/d dots = (p_ab - 1, p_ao, p_bo), scaled per batch
            let c0 = (p[0] - 1.0) * batch_scale;
            let c1 = p[1] * batch_scale;
            let c2 = p[2] * batch_scale;
            for d in 0..q {
                let (xa, xb, xo) = (wa[d], wb[d], wo[d]);
                g_lik[a * q + d] += c0 * xb + c1 * xo;
                g_lik[b * q + d] += c0 * xa + c2 * xo;
                g_lik[o * q + d] += c1 * xa + c2 * xb;
            }
        }
        if !batch.is_empty() {
            log_lik_total += log_lik / batch.len() as f64;
        }

        for e in 0..m * q {
            let lik = if w[e] > 0.0 { g_lik[e] } else { 0.0 };
            let dw = (-inv_n * g_prior[e] + lik) * inv_s;
            grad_mu[e] += dw;
            grad_ls[e] += dw * sigma[e] * eps[e];
        }
    }

    let log_prior_mean = log_prior_total * inv_s;
    let log_likelihood = log_lik_total * inv_s;
    let complexity = inv_n * (neg_entropy - log_prior_mean);
    ElboTerms {
        loss: complexity - likelihood_weight * log_likelihood,
        complexity,
        log_likelihood,
        grad_mu: Array2::from_shape_vec((m, q), grad_mu).expect("shape"),
        grad_log_sigma: Array2::from_shape_vec((m, q), grad_ls).expect("shape"),
    }
}
