//! Softmax over the three pairwise similarities of a triplet.
//!
//! Similarities are always passed as `[chosen, other, other]`: for a
//! judgment `(a, b, odd)` that is `[s_ab, s_a_odd, s_b_odd]`, and for a pair
//! `(i, j)` in context `k` it is `[s_ij, s_ik, s_jk]`.

/// Probabilities of each of the three pairs being judged most similar.
pub fn pair_probabilities(s: [f64; 3]) -> [f64; 3] {
    let max = s[0].max(s[1]).max(s[2]);
    let e = [(s[0] - max).exp(), (s[1] - max).exp(), (s[2] - max).exp()];
    let z = e[0] + e[1] + e[2];
    [e[0] / z, e[1] / z, e[2] / z]
}

/// Probability of the first pair.
pub fn chosen_probability(s: [f64; 3]) -> f64 {
    pair_probabilities(s)[0]
}

/// `log` of the first pair's probability, computed without forming the ratio.
pub fn log_chosen_probability(s: [f64; 3]) -> f64 {
    let max = s[0].max(s[1]).max(s[2]);
    let lse = max + ((s[0] - max).exp() + (s[1] - max).exp() + (s[2] - max).exp()).ln();
    s[0] - lse
}
