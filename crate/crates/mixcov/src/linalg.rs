//! Small dense linear algebra helpers; everything here is allocation-light
//! and sized for the low-dimensional systems that arise in link fitting and
//! sandwich covariances.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn add_assign(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Max absolute row sum (infinity norm).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Pairwise (cascade) summation: order-stable and accurate for long reductions.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Solve A x = b by Gauss-Jordan with partial pivoting. A is square.
pub fn solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    assert_eq!(b.len(), n);
    let mut aug = vec![0.0; n * (n + 1)];
    for i in 0..n {
        aug[i * (n + 1)..i * (n + 1) + n].copy_from_slice(a.row(i));
        aug[i * (n + 1) + n] = b[i];
    }
    gauss_eliminate(&mut aug, n, 1)?;
    Ok((0..n).map(|i| aug[i * (n + 1) + n]).collect())
}

/// Invert a square matrix by Gauss-Jordan with partial pivoting.
pub fn invert(a: &Mat) -> Result<Mat> {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    let w = 2 * n;
    let mut aug = vec![0.0; n * w];
    for i in 0..n {
        aug[i * w..i * w + n].copy_from_slice(a.row(i));
        aug[i * w + n + i] = 1.0;
    }
    gauss_eliminate(&mut aug, n, n)?;
    let mut inv = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            inv.set(i, j, aug[i * w + n + j]);
        }
    }
    Ok(inv)
}

/// In-place Gauss-Jordan on an n x (n + extra) augmented system.
fn gauss_eliminate(aug: &mut [f64], n: usize, extra: usize) -> Result<()> {
    let w = n + extra;
    if aug.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularHessian);
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                aug[i * w + col]
                    .abs()
                    .partial_cmp(&aug[j * w + col].abs())
                    .unwrap()
            })
            .unwrap();
        let pivot = aug[pivot_row * w + col];
        if !pivot.is_finite() || pivot.abs() < 1e-300 {
            return Err(Error::SingularHessian);
        }
        if pivot_row != col {
            for k in 0..w {
                aug.swap(col * w + k, pivot_row * w + k);
            }
        }
        let inv_p = 1.0 / aug[col * w + col];
        for k in col..w {
            aug[col * w + k] *= inv_p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = aug[row * w + col];
            if factor == 0.0 {
                continue;
            }
            for k in col..w {
                aug[row * w + k] -= factor * aug[col * w + k];
            }
        }
    }
    Ok(())
}

/// Infinity-norm condition number estimate ||A|| * ||A^-1||.
pub fn cond_inf(a: &Mat) -> Result<f64> {
    let inv = invert(a)?;
    Ok(a.norm_inf() * inv.norm_inf())
}

/// Ordinary least squares: minimize ||X b - y||^2 via normal equations.
pub fn ols(x: &Mat, y: &[f64]) -> Result<Vec<f64>> {
    let (n, q) = (x.rows(), x.cols());
    assert_eq!(y.len(), n);
    let mut xtx = Mat::zeros(q, q);
    let mut xty = vec![0.0; q];
    for i in 0..n {
        let r = x.row(i);
        for j in 0..q {
            xty[j] += r[j] * y[i];
            for k in j..q {
                xtx.add_assign(j, k, r[j] * r[k]);
            }
        }
    }
    for j in 0..q {
        for k in 0..j {
            let v = xtx.get(k, j);
            xtx.set(j, k, v);
        }
    }
    solve(&xtx, &xty)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_and_invert_roundtrip() {
        let a = Mat::from_rows(&[vec![4.0, 1.0, 0.5], vec![1.0, 3.0, 0.2], vec![0.5, 0.2, 2.0]]);
        let b = vec![1.0, 2.0, 3.0];
        let x = solve(&a, &b).unwrap();
        for i in 0..3 {
            let got: f64 = (0..3).map(|j| a.get(i, j) * x[j]).sum();
            assert!((got - b[i]).abs() < 1e-12);
        }
        let inv = invert(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let got: f64 = (0..3).map(|k| a.get(i, k) * inv.get(k, j)).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((got - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(invert(&a).is_err());
    }

    #[test]
    fn pairwise_matches_naive_on_smooth_data() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-9);
    }

    #[test]
    fn ols_recovers_exact_coefficients() {
        let x = Mat::from_rows(&[
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![1.0, 2.0],
            vec![1.0, 3.0],
        ]);
        let y: Vec<f64> = (0..4).map(|i| 2.0 + 0.5 * i as f64).collect();
        let b = ols(&x, &y).unwrap();
        assert!((b[0] - 2.0).abs() < 1e-12 && (b[1] - 0.5).abs() < 1e-12);
    }
}
