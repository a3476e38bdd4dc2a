use ndarray::{ArrayView2, Axis};

use super::VariationalEmbedding;

/// `Pr(w > 0) = Phi(mu / sigma)` for one posterior entry.
pub fn keep_probability(mu: f64, log_sigma: f64) -> f64 {
    let z = mu / log_sigma.exp();
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Dimensions that stay: those reliably positive (`Pr(w > 0) >= keep_prob_threshold`)
/// for at least `min_objects` objects. Only currently active dimensions are
/// considered, so a pruned dimension never comes back. The result is ordered
/// by descending column sum of `max(0, mu)`, ties by index.
pub fn prune_dimensions(
    params: &VariationalEmbedding,
    keep_prob_threshold: f64,
    min_objects: usize,
) -> Vec<usize> {
    surviving(
        params.mu.view(),
        params.log_sigma.view(),
        &params.active_dims,
        keep_prob_threshold,
        min_objects,
    )
}

pub(crate) fn surviving(
    mu: ArrayView2<'_, f64>,
    log_sigma: ArrayView2<'_, f64>,
    candidates: &[usize],
    keep_prob_threshold: f64,
    min_objects: usize,
) -> Vec<usize> {
    let mut kept: Vec<(usize, f64)> = candidates
        .iter()
        .filter_map(|&d| {
            let mu_col = mu.index_axis(Axis(1), d);
            let ls_col = log_sigma.index_axis(Axis(1), d);
            let reliable = mu_col
                .iter()
                .zip(ls_col)
                .filter(|(&m, &l)| keep_probability(m, l) >= keep_prob_threshold)
                .count();
            (reliable >= min_objects).then(|| (d, mu_col.iter().map(|v| v.max(0.0)).sum()))
        })
        .collect();
    kept.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    kept.into_iter().map(|(d, _)| d).collect()
}
