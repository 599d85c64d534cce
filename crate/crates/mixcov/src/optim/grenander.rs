//! Weighted monotone-density MLE on (0, 1]: the Grenander-type estimator
//! computed through an equivalent weighted isotonic least squares problem.

use super::weighted_isotonic_ls;
use crate::error::{Error, Result};
use crate::model::SignalDensity;

/// Fit the nonincreasing density maximizing sum w_i log f(Y_i) over step
/// densities on (0, 1]. Weights are rescaled to sum n, and the solution is
/// the antitonic weighted least squares fit of the raw slopes
/// w_i / (n (Y_(i) - Y_(i-1))) with interval-length weights.
///
/// Ties in y receive a deterministic jitter of +k*1e-12 on the k-th
/// duplicate so the order statistics are strictly increasing.
pub fn grenander_weighted(y: &[f64], w: &[f64], normalize: bool) -> Result<SignalDensity> {
    let n = y.len();
    assert_eq!(w.len(), n);
    if n == 0 {
        return Err(Error::BadInput("empty sample".into()));
    }
    if y.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
        return Err(Error::BadInput("responses must lie in (0, 1]".into()));
    }
    let wsum: f64 = w.iter().sum();
    if wsum <= 0.0 {
        return Err(Error::WeightsAllZero);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| y[i].partial_cmp(&y[j]).unwrap());
    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let scale = n as f64 / wsum;
    let ws: Vec<f64> = order.iter().map(|&i| w[i] * scale).collect();

    // deterministic tie jitter
    let mut k = 0usize;
    for i in 1..n {
        if ys[i] <= ys[i - 1] {
            k += 1;
            ys[i] = ys[i - 1] + k as f64 * 1e-12;
        } else {
            k = 0;
        }
    }

    let nf = n as f64;
    let mut gaps = Vec::with_capacity(n);
    let mut slopes = Vec::with_capacity(n);
    let mut prev = 0.0;
    for i in 0..n {
        let d = ys[i] - prev;
        gaps.push(d);
        slopes.push(ws[i] / (nf * d));
        prev = ys[i];
    }

    // nonincreasing fit == nondecreasing fit of the reversed sequence
    let rev_t: Vec<f64> = slopes.iter().rev().copied().collect();
    let rev_w: Vec<f64> = gaps.iter().rev().copied().collect();
    let fit_rev = weighted_isotonic_ls(&rev_t, &rev_w, None);
    let mut levels: Vec<f64> = fit_rev.into_iter().rev().collect();

    let mass: f64 = levels.iter().zip(&gaps).map(|(l, d)| l * d).sum();
    if normalize && mass > 0.0 {
        for l in &mut levels {
            *l /= mass;
        }
    }

    let density = SignalDensity::Decreasing { breakpoints: ys, levels };
    density.validate()?;
    Ok(density)
}
