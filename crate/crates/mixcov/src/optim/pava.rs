//! Weighted isotonic least squares by pool-adjacent-violators.

/// Minimize sum_i weights_i * (fit_i - targets_i)^2 subject to fit being
/// nondecreasing, optionally clipped to a box [lo, hi] (clipping the
/// unconstrained isotonic solution is exact for box constraints).
pub fn weighted_isotonic_ls(
    targets: &[f64],
    weights: &[f64],
    bounds: Option<(f64, f64)>,
) -> Vec<f64> {
    let n = targets.len();
    assert_eq!(weights.len(), n);
    debug_assert!(weights.iter().all(|&w| w > 0.0), "weights must be positive");

    // stack of blocks (mean, weight, count)
    let mut means: Vec<f64> = Vec::with_capacity(n);
    let mut wsum: Vec<f64> = Vec::with_capacity(n);
    let mut count: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        means.push(targets[i]);
        wsum.push(weights[i]);
        count.push(1);
        while means.len() > 1 && means[means.len() - 2] > means[means.len() - 1] {
            let (m2, w2, c2) = (means.pop().unwrap(), wsum.pop().unwrap(), count.pop().unwrap());
            let k = means.len() - 1;
            let merged_w = wsum[k] + w2;
            means[k] = (means[k] * wsum[k] + m2 * w2) / merged_w;
            wsum[k] = merged_w;
            count[k] += c2;
        }
    }

    let mut out = Vec::with_capacity(n);
    for (m, c) in means.iter().zip(&count) {
        let v = match bounds {
            Some((lo, hi)) => m.clamp(lo, hi),
            None => *m,
        };
        out.extend(std::iter::repeat(v).take(*c));
    }
    out
}
