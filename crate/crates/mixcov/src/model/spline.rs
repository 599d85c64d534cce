//! Per-covariate B-spline design expansion.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use serde::{Deserialize, Serialize};

/// Knot-rule metadata recorded alongside fits for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineMeta {
    pub df: usize,
    /// Observed (min, max) per original covariate; the clamped knots.
    pub ranges: Vec<(f64, f64)>,
}

/// Expand an n x p design into n x (p*df) spline basis columns.
///
/// Each covariate is min-max rescaled to t in [0,1] over its observed range
/// and mapped to the Bernstein basis of degree df with the constant-carrying
/// first function dropped: columns are C(df,j) t^j (1-t)^(df-j), j = 1..df.
/// For df = 3 this is the clamped cubic basis with no interior knots; for
/// df = 1 it reduces to the rescaled covariate itself.
pub fn spline_expand(x: &Mat, df: usize) -> Result<(Mat, SplineMeta)> {
    assert!(df >= 1, "df must be at least 1");
    let (n, p) = (x.rows(), x.cols());
    let mut ranges = Vec::with_capacity(p);
    for j in 0..p {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let v = x.get(i, j);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !(hi > lo) {
            return Err(Error::ConstantCovariate { index: j });
        }
        ranges.push((lo, hi));
    }
    let mut out = Mat::zeros(n, p * df);
    for i in 0..n {
        for j in 0..p {
            let (lo, hi) = ranges[j];
            let t = ((x.get(i, j) - lo) / (hi - lo)).clamp(0.0, 1.0);
            for k in 1..=df {
                out.set(i, j * df + (k - 1), bernstein(df, k, t));
            }
        }
    }
    Ok((out, SplineMeta { df, ranges }))
}

/// Evaluate the same basis at new covariate rows using recorded ranges
/// (inputs are clamped to the training range).
pub fn spline_apply(x: &Mat, meta: &SplineMeta) -> Mat {
    let (n, p) = (x.rows(), x.cols());
    assert_eq!(p, meta.ranges.len());
    let df = meta.df;
    let mut out = Mat::zeros(n, p * df);
    for i in 0..n {
        for j in 0..p {
            let (lo, hi) = meta.ranges[j];
            let t = ((x.get(i, j) - lo) / (hi - lo)).clamp(0.0, 1.0);
            for k in 1..=df {
                out.set(i, j * df + (k - 1), bernstein(df, k, t));
            }
        }
    }
    out
}

fn bernstein(deg: usize, j: usize, t: f64) -> f64 {
    binom(deg, j) * t.powi(j as i32) * (1.0 - t).powi((deg - j) as i32)
}

fn binom(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_design() -> Mat {
        Mat::from_rows(&[
            vec![0.0, 10.0],
            vec![0.25, 12.0],
            vec![0.5, 14.0],
            vec![1.0, 20.0],
        ])
    }

    #[test]
    fn df3_doubles_two_covariates_to_six_columns() {
        let (b, meta) = spline_expand(&toy_design(), 3).unwrap();
        assert_eq!(b.cols(), 6);
        assert_eq!(meta.ranges, vec![(0.0, 1.0), (10.0, 20.0)]);
    }

    #[test]
    fn df1_is_min_max_rescaling() {
        let (b, _) = spline_expand(&toy_design(), 1).unwrap();
        assert_eq!(b.cols(), 2);
        let expected = [0.0, 0.25, 0.5, 1.0];
        for i in 0..4 {
            assert!((b.get(i, 0) - expected[i]).abs() < 1e-15);
        }
        assert!((b.get(1, 1) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn boundary_rows_hit_the_endpoint_pattern() {
        // with the constant-carrying function dropped, the left edge maps to
        // the all-zero row and the right edge puts 1 on the last column
        let (b, _) = spline_expand(&toy_design(), 3).unwrap();
        for k in 0..3 {
            assert_eq!(b.get(0, k), 0.0);
        }
        assert_eq!(b.get(3, 2), 1.0);
        assert_eq!(b.get(3, 0), 0.0);
        assert_eq!(b.get(3, 1), 0.0);
    }

    #[test]
    fn values_stay_in_unit_interval_and_deterministic() {
        let (b1, _) = spline_expand(&toy_design(), 3).unwrap();
        let (b2, _) = spline_expand(&toy_design(), 3).unwrap();
        assert_eq!(b1, b2);
        assert!(b1.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn constant_covariate_is_rejected() {
        let x = Mat::from_rows(&[vec![1.0, 3.0], vec![1.0, 4.0]]);
        match spline_expand(&x, 3) {
            Err(Error::ConstantCovariate { index }) => assert_eq!(index, 0),
            other => panic!("expected ConstantCovariate, got {other:?}"),
        }
    }

    #[test]
    fn apply_matches_expand_on_training_rows() {
        let x = toy_design();
        let (b, meta) = spline_expand(&x, 3).unwrap();
        let b2 = spline_apply(&x, &meta);
        assert_eq!(b, b2);
    }
}
