//! Multiple testing from lFDRs and the distance-covariance independence
//! screen.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::NullDensity;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Outcome of the lFDR rejection rule at a nominal level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectionReport {
    pub alpha: f64,
    /// Size of the largest sorted prefix whose running mean stays below the
    /// level (0 when the first lFDR already exceeds it).
    pub k_hat: usize,
    /// 0-based indices of rejected hypotheses: every i with
    /// lfdr_i <= threshold_lfdr (ties at the threshold all rejected).
    pub rejected: Vec<usize>,
    pub threshold_lfdr: Option<f64>,
    /// Mean of the k_hat smallest lFDRs (0 when nothing is rejected).
    pub realized_avg_lfdr: f64,
    /// Set when a rejected response is less extreme than an accepted one;
    /// informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotonicity_violation: Option<bool>,
}

/// Reject the hypotheses whose lFDR falls at or below the adaptive cutoff:
/// sort ascending, keep the largest prefix with running mean <= alpha, and
/// reject everything at or below that order statistic.
pub fn reject_at_level(lfdr: &[f64], alpha: f64) -> Result<RejectionReport> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::BadInput(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if lfdr.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(Error::BadInput("lfdr entries must lie in [0,1]".into()));
    }
    let mut sorted = lfdr.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut k_hat = 0usize;
    let mut running = 0.0;
    let mut realized = 0.0;
    for (k, &l) in sorted.iter().enumerate() {
        running += l;
        if running / (k + 1) as f64 <= alpha {
            k_hat = k + 1;
            realized = running / (k + 1) as f64;
        }
    }
    let (threshold, rejected) = if k_hat == 0 {
        (None, Vec::new())
    } else {
        let t = sorted[k_hat - 1];
        let rejected: Vec<usize> = lfdr
            .iter()
            .enumerate()
            .filter(|(_, &l)| l <= t)
            .map(|(i, _)| i)
            .collect();
        (Some(t), rejected)
    };
    Ok(RejectionReport {
        alpha,
        k_hat,
        rejected,
        threshold_lfdr: threshold,
        realized_avg_lfdr: realized,
        monotonicity_violation: None,
    })
}

/// Annotate a report with the monotonicity caveat: flags when some rejected
/// response is less extreme than an accepted one. Extremeness is |y - mu0|
/// for location nulls and smallness for the uniform (p-value) null.
pub fn flag_monotonicity(report: &mut RejectionReport, y: &[f64], null: &NullDensity) {
    let extremeness = |v: f64| match null {
        NullDensity::UniformUnit => -v,
        _ => (v - null.mean()).abs(),
    };
    let mut in_rejected = vec![false; y.len()];
    for &i in &report.rejected {
        in_rejected[i] = true;
    }
    let min_rejected = report
        .rejected
        .iter()
        .map(|&i| extremeness(y[i]))
        .fold(f64::INFINITY, f64::min);
    let max_accepted = (0..y.len())
        .filter(|&i| !in_rejected[i])
        .map(|i| extremeness(y[i]))
        .fold(f64::NEG_INFINITY, f64::max);
    report.monotonicity_violation =
        Some(!report.rejected.is_empty() && max_accepted > min_rejected);
}

/// Per-replicate false discovery proportion and true positive proportion.
/// Conventions: 0/0 = 0 for the FDP; the TPP denominator is the number of
/// non-nulls (at least 1).
pub fn fdr_tpr(rejected: &[usize], z_true: &[u8]) -> (f64, f64) {
    let n_rej = rejected.len();
    let false_rej = rejected.iter().filter(|&&i| z_true[i] == 0).count();
    let true_rej = n_rej - false_rej;
    let non_null = z_true.iter().filter(|&&z| z == 1).count();
    let fdp = false_rej as f64 / (n_rej.max(1)) as f64;
    let tpp = true_rej as f64 / (non_null.max(1)) as f64;
    (fdp, tpp)
}

/// Distance covariance report from a permutation test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DcovReport {
    pub statistic: f64,
    pub permutations: usize,
    pub p_value: f64,
    pub seed: u64,
}

/// Double-centered Euclidean distance matrix, flattened row-major.
fn centered_distances(dist: &[f64], n: usize) -> Vec<f64> {
    let mut row_mean = vec![0.0; n];
    let mut grand = 0.0;
    for k in 0..n {
        let mut s = 0.0;
        for l in 0..n {
            s += dist[k * n + l];
        }
        row_mean[k] = s / n as f64;
        grand += s;
    }
    grand /= (n * n) as f64;
    let mut out = vec![0.0; n * n];
    for k in 0..n {
        for l in 0..n {
            out[k * n + l] = dist[k * n + l] - row_mean[k] - row_mean[l] + grand;
        }
    }
    out
}

fn pairwise_dist_rows(x: &Mat) -> Vec<f64> {
    let n = x.rows();
    let mut d = vec![0.0; n * n];
    for k in 0..n {
        for l in (k + 1)..n {
            let dd: f64 = x
                .row(k)
                .iter()
                .zip(x.row(l))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[k * n + l] = dd;
            d[l * n + k] = dd;
        }
    }
    d
}

fn pairwise_dist_scalar(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut d = vec![0.0; n * n];
    for k in 0..n {
        for l in (k + 1)..n {
            let dd = (y[k] - y[l]).abs();
            d[k * n + l] = dd;
            d[l * n + k] = dd;
        }
    }
    d
}

/// Sample distance covariance dCov_n(X, Y) = (1/n^2) sum A_kl B_kl over the
/// double-centered distance matrices.
pub fn dcov_statistic(x: &Mat, y: &[f64]) -> Result<f64> {
    let n = x.rows();
    if n < 2 || y.len() != n {
        return Err(Error::BadInput("distance covariance needs n >= 2 matching rows".into()));
    }
    let a = centered_distances(&pairwise_dist_rows(x), n);
    let b = centered_distances(&pairwise_dist_scalar(y), n);
    let mut s = 0.0;
    for (av, bv) in a.iter().zip(&b) {
        s += av * bv;
    }
    Ok(s / (n * n) as f64)
}

/// Permutation test for independence of X and Y: permute y, recompute the
/// statistic, and report (1 + #{permuted >= observed}) / (permutations + 1).
/// Per-permutation RNG streams are derived deterministically from the seed.
pub fn dcov_permutation_test(
    x: &Mat,
    y: &[f64],
    permutations: usize,
    seed: u64,
) -> Result<DcovReport> {
    if permutations < 1 {
        return Err(Error::BadInput("need at least one permutation".into()));
    }
    let n = x.rows();
    if n < 2 || y.len() != n {
        return Err(Error::BadInput("distance covariance needs n >= 2 matching rows".into()));
    }
    let a = centered_distances(&pairwise_dist_rows(x), n);
    let b = centered_distances(&pairwise_dist_scalar(y), n);
    let inv_n2 = 1.0 / (n * n) as f64;

    let observed: f64 = a.iter().zip(&b).map(|(u, v)| u * v).sum::<f64>() * inv_n2;

    // relabeling y by sigma permutes rows and columns of the centered B
    let mut exceed = 0usize;
    let mut perm: Vec<usize> = (0..n).collect();
    for r in 0..permutations {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, r as u64));
        perm.iter_mut().enumerate().for_each(|(i, v)| *v = i);
        perm.shuffle(&mut rng);
        let mut s = 0.0;
        for k in 0..n {
            let pk = perm[k] * n;
            let arow = &a[k * n..(k + 1) * n];
            for (l, &av) in arow.iter().enumerate() {
                s += av * b[pk + perm[l]];
            }
        }
        if s * inv_n2 >= observed {
            exceed += 1;
        }
    }
    Ok(DcovReport {
        statistic: observed,
        permutations,
        p_value: (1 + exceed) as f64 / (permutations + 1) as f64,
        seed,
    })
}

/// Fixed 64-bit mixer used to derive per-task seeds from a master seed.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ splitmix(index.wrapping_add(0x9E3779B97F4A7C15));
    z = splitmix(z);
    z
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Test hook: run the permutation count with explicit permutations.
#[doc(hidden)]
pub fn dcov_permutation_test_with(x: &Mat, y: &[f64], perms: &[Vec<usize>]) -> Result<DcovReport> {
    let n = x.rows();
    let a = centered_distances(&pairwise_dist_rows(x), n);
    let b = centered_distances(&pairwise_dist_scalar(y), n);
    let inv_n2 = 1.0 / (n * n) as f64;
    let observed: f64 = a.iter().zip(&b).map(|(u, v)| u * v).sum::<f64>() * inv_n2;
    let mut exceed = 0usize;
    for perm in perms {
        let mut s = 0.0;
        for k in 0..n {
            for l in 0..n {
                s += a[k * n + l] * b[perm[k] * n + perm[l]];
            }
        }
        if s * inv_n2 >= observed {
            exceed += 1;
        }
    }
    Ok(DcovReport {
        statistic: observed,
        permutations: perms.len(),
        p_value: (1 + exceed) as f64 / (perms.len() + 1) as f64,
        seed: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn running_mean_examples() {
        let r = reject_at_level(&[0.02, 0.05, 0.2], 0.1).unwrap();
        assert_eq!(r.k_hat, 3);
        assert_eq!(r.rejected, vec![0, 1, 2]);
        assert!((r.realized_avg_lfdr - 0.09).abs() < 1e-12);

        let r = reject_at_level(&[0.02, 0.05, 0.2], 0.05).unwrap();
        assert_eq!(r.k_hat, 2);
        assert_eq!(r.rejected, vec![0, 1]);
        assert!((r.realized_avg_lfdr - 0.035).abs() < 1e-12);
    }

    #[test]
    fn empty_set_convention() {
        let r = reject_at_level(&[0.5, 0.9], 0.1).unwrap();
        assert_eq!(r.k_hat, 0);
        assert!(r.rejected.is_empty());
        assert_eq!(r.threshold_lfdr, None);
        assert_eq!(r.realized_avg_lfdr, 0.0);
    }

    #[test]
    fn ties_at_threshold_all_rejected() {
        let r = reject_at_level(&[0.05, 0.10, 0.10, 0.9], 0.09).unwrap();
        // prefix means: 0.05, 0.075, 0.0833..; k_hat = 3, threshold 0.10
        assert_eq!(r.k_hat, 3);
        assert_eq!(r.rejected, vec![0, 1, 2]);
    }

    #[test]
    fn rejection_rule_matches_prefix_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..500 {
            let n = rng.random_range(1..=10);
            let lfdr: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let alpha = rng.random_range(0.01..0.99);
            let r = reject_at_level(&lfdr, alpha).unwrap();
            // oracle: maximum-cardinality lower set of the sorted order with
            // mean <= alpha
            let mut sorted = lfdr.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut best = 0usize;
            for k in 1..=n {
                let mean: f64 = sorted[..k].iter().sum::<f64>() / k as f64;
                if mean <= alpha {
                    best = k;
                }
            }
            assert_eq!(r.k_hat, best, "lfdr {lfdr:?} alpha {alpha}");
            if best > 0 {
                let mean: f64 = sorted[..best].iter().sum::<f64>() / best as f64;
                assert!(mean <= alpha);
                assert!((r.realized_avg_lfdr - mean).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn monotonicity_flag_spots_out_of_order_rejections() {
        // z-score scale: rejecting y = 1.5 while accepting y = -3 is flagged
        let y = vec![1.5, -3.0, 0.1];
        let mut report = reject_at_level(&[0.01, 0.6, 0.9], 0.1).unwrap();
        assert_eq!(report.rejected, vec![0]);
        flag_monotonicity(&mut report, &y, &NullDensity::StdNormal);
        assert_eq!(report.monotonicity_violation, Some(true));

        // rejecting the most extreme point only is clean
        let mut report = reject_at_level(&[0.6, 0.01, 0.9], 0.1).unwrap();
        flag_monotonicity(&mut report, &y, &NullDensity::StdNormal);
        assert_eq!(report.monotonicity_violation, Some(false));

        // p-value scale: smaller is more extreme
        let p = vec![0.001, 0.5, 0.9];
        let mut report = reject_at_level(&[0.01, 0.6, 0.9], 0.1).unwrap();
        flag_monotonicity(&mut report, &p, &NullDensity::UniformUnit);
        assert_eq!(report.monotonicity_violation, Some(false));
    }

    #[test]
    fn fdr_tpr_conventions() {
        let z = vec![0u8, 0, 1, 1];
        assert_eq!(fdr_tpr(&[], &z), (0.0, 0.0));
        assert_eq!(fdr_tpr(&[2, 3], &z), (0.0, 1.0));
        assert_eq!(fdr_tpr(&[0, 1, 2, 3], &z), (0.5, 1.0));
    }

    #[test]
    fn dcov_constant_y_is_zero() {
        let x = Mat::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]);
        let s = dcov_statistic(&x, &[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn dcov_two_point_closed_form() {
        let x = Mat::from_rows(&[vec![0.0], vec![1.0]]);
        let s = dcov_statistic(&x, &[0.0, 1.0]).unwrap();
        assert!((s - 0.25).abs() < 1e-14);
    }

    #[test]
    fn dcov_invariances() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..15)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let y: Vec<f64> = (0..15).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x = Mat::from_rows(&rows);
        let base = dcov_statistic(&x, &y).unwrap();
        assert!(base >= -1e-12);

        // joint relabeling leaves the statistic unchanged
        let mut order: Vec<usize> = (0..15).collect();
        order.shuffle(&mut rng);
        let xr = Mat::from_rows(&order.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>());
        let yr: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let relabeled = dcov_statistic(&xr, &yr).unwrap();
        assert!((base - relabeled).abs() < 1e-12);

        // adding a constant to y leaves distances unchanged
        let shifted: Vec<f64> = y.iter().map(|v| v + 13.7).collect();
        let s2 = dcov_statistic(&x, &shifted).unwrap();
        assert!((base - s2).abs() < 1e-12);
    }

    #[test]
    fn permutation_determinism_and_identity_hook() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
        let y: Vec<f64> = (0..30).map(|_| rng.random_range(0.0..1.0)).collect();
        let x = Mat::from_rows(&rows);
        let a = dcov_permutation_test(&x, &y, 99, 7).unwrap();
        let b = dcov_permutation_test(&x, &y, 99, 7).unwrap();
        assert_eq!(a.p_value, b.p_value);

        // identity permutation ties with the observed statistic: p = 1
        let identity: Vec<usize> = (0..30).collect();
        let hook = dcov_permutation_test_with(&x, &y, &[identity]).unwrap();
        assert_eq!(hook.p_value, 1.0);

        // constant y: statistic 0, all permuted statistics 0, p = 1
        let constant = vec![0.5; 30];
        let c = dcov_permutation_test(&x, &constant, 19, 3).unwrap();
        assert_eq!(c.statistic, 0.0);
        assert_eq!(c.p_value, 1.0);
    }

    #[test]
    fn permuted_statistic_matches_direct_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
        let y: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..1.0)).collect();
        let x = Mat::from_rows(&rows);

        let mut perm: Vec<usize> = (0..12).collect();
        perm.shuffle(&mut rng);
        let y_perm: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        // the index-shuffled centered-B evaluation must equal recomputing the
        // statistic on the permuted responses
        let direct = dcov_statistic(&x, &y_perm).unwrap();
        let n = 12;
        let a = centered_distances(&pairwise_dist_rows(&x), n);
        let b = centered_distances(&pairwise_dist_scalar(&y), n);
        let mut s = 0.0;
        for k in 0..n {
            for l in 0..n {
                s += a[k * n + l] * b[perm[k] * n + perm[l]];
            }
        }
        s /= (n * n) as f64;
        assert!((s - direct).abs() < 1e-12);
    }
}
