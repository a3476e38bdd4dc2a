//! Small statistics helpers: Pearson correlation and column standardization.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

/// Pearson correlation. Returns `None` when either side has (numerically) zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "pearson: length mismatch");
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let da = a - mx;
        let db = b - my;
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    // Spread below the rounding noise of the values counts as constant.
    let floor = |v: &[f64], m: f64| {
        let scale = v.iter().fold(m.abs(), |a, b| a.max(b.abs()));
        (1e-13 * scale).powi(2) * n as f64
    };
    if sxx <= floor(x, mx) || syy <= floor(y, my) {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation with the zero-variance case defined as 0.
pub fn pearson_or_zero(x: &[f64], y: &[f64]) -> f64 {
    pearson(x, y).unwrap_or(0.0)
}

/// Centers each column and scales it to unit norm, so that the dot product of
/// two output columns is their Pearson correlation. Zero-variance columns come
/// back as all zeros. The result is stored column-major (one row per input
/// column) for contiguous access.
pub fn unit_columns(m: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = m.t().to_owned();
    for mut col in out.axis_iter_mut(Axis(0)) {
        let n = col.len() as f64;
        let mean = col.sum() / n;
        let scale = col.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        col.mapv_inplace(|v| v - mean);
        let norm = col.dot(&col).sqrt();
        if norm > 1e-13 * scale * n.sqrt() && norm.is_finite() {
            col.mapv_inplace(|v| v / norm);
        } else {
            col.fill(0.0);
        }
    }
    out
}

/// Correlation between every column of `a` and every column of `b`
/// (`a.ncols() x b.ncols()`), zero where either column is constant.
pub fn column_correlations(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    assert_eq!(a.nrows(), b.nrows(), "column_correlations: row mismatch");
    let ua = unit_columns(a);
    let ub = unit_columns(b);
    ua.dot(&ub.t()).mapv(|r| r.clamp(-1.0, 1.0))
}

pub fn mean(x: ArrayView1<'_, f64>) -> f64 {
    x.sum() / x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pearson_basics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let y: Vec<f64> = x.iter().map(|v| -2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&x, &[3.0; 4]), None);
        assert_eq!(pearson_or_zero(&x, &[3.0; 4]), 0.0);
    }

    #[test]
    fn correlation_matrix_matches_pairwise() {
        let a = array![
            [1.0, 0.0, 2.0],
            [2.0, 1.0, 2.0],
            [0.5, 3.0, 2.0],
            [4.0, 1.0, 2.0]
        ];
        let c = column_correlations(a.view(), a.view());
        for i in 0..3 {
            for j in 0..3 {
                let x = a.column(i).to_vec();
                let y = a.column(j).to_vec();
                assert!((c[[i, j]] - pearson_or_zero(&x, &y)).abs() < 1e-12);
            }
        }
        assert_eq!(c[[2, 2]], 0.0);
    }
}
