//! Joint log-likelihood, lFDR formula and the approximate-MLE check.

use super::{Dataset, NullDensity, PriorFn, SignalDensity};
use crate::error::{Error, Result};
use crate::linalg::pairwise_sum;

/// Floor applied to each per-observation mixture density before taking logs.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Whether underflowing mixture densities are clamped at the floor or
/// reported as an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clamping {
    Floor,
    Strict,
}

/// Normalized log-likelihood value plus the count of clamped terms.
#[derive(Debug, Clone, Copy)]
pub struct LoglikValue {
    pub value: f64,
    pub clamped: usize,
}

/// Mixture density pi*f1 + (1-pi)*f0 at a single observation.
pub fn mixture_density(pi: f64, f1: f64, f0: f64) -> f64 {
    pi * f1 + (1.0 - pi) * f0
}

/// Normalized joint log-likelihood from per-observation evaluations.
pub fn loglik_from_parts(
    pi: &[f64],
    f1: &[f64],
    f0: &[f64],
    clamping: Clamping,
) -> Result<LoglikValue> {
    let n = pi.len();
    assert!(n == f1.len() && n == f0.len());
    let mut clamped = 0usize;
    let mut terms = Vec::with_capacity(n);
    for i in 0..n {
        let mut d = mixture_density(pi[i], f1[i], f0[i]);
        if d < DENSITY_FLOOR {
            clamped += 1;
            if clamping == Clamping::Strict {
                return Err(Error::DegenerateLikelihood { clamped });
            }
            d = DENSITY_FLOOR;
        }
        terms.push(d.ln());
    }
    Ok(LoglikValue { value: pairwise_sum(&terms) / n as f64, clamped })
}

/// Local false discovery rates from per-observation evaluations:
/// `(1-pi) f0 / ((1-pi) f0 + pi f1)`.
pub fn lfdr_from_parts(
    pi: &[f64],
    f1: &[f64],
    f0: &[f64],
    clamping: Clamping,
) -> Result<Vec<f64>> {
    let n = pi.len();
    assert!(n == f1.len() && n == f0.len());
    let mut out = Vec::with_capacity(n);
    let mut clamped = 0usize;
    for i in 0..n {
        let num = (1.0 - pi[i]) * f0[i];
        let mut den = num + pi[i] * f1[i];
        if den < DENSITY_FLOOR {
            clamped += 1;
            if clamping == Clamping::Strict {
                return Err(Error::DegenerateLikelihood { clamped });
            }
            den = DENSITY_FLOOR;
        }
        out.push((num / den).clamp(0.0, 1.0));
    }
    Ok(out)
}

/// Normalized joint log-likelihood of a (prior, signal) pair on a dataset.
pub fn loglik_joint(
    prior: &PriorFn,
    f1: &SignalDensity,
    f0: &NullDensity,
    data: &Dataset,
) -> Result<f64> {
    let pi = prior.eval_all(data);
    let f1v: Vec<f64> = data.y().iter().map(|&y| f1.pdf(y)).collect();
    let f0v: Vec<f64> = data.y().iter().map(|&y| f0.pdf(y)).collect();
    Ok(loglik_from_parts(&pi, &f1v, &f0v, Clamping::Floor)?.value)
}

/// Per-observation lFDR vector for a (prior, signal) pair.
pub fn lfdr_vector(
    prior: &PriorFn,
    f1: &SignalDensity,
    f0: &NullDensity,
    data: &Dataset,
) -> Result<Vec<f64>> {
    let pi = prior.eval_all(data);
    let f1v: Vec<f64> = data.y().iter().map(|&y| f1.pdf(y)).collect();
    let f0v: Vec<f64> = data.y().iter().map(|&y| f0.pdf(y)).collect();
    lfdr_from_parts(&pi, &f1v, &f0v, Clamping::Floor)
}

#[derive(Debug, Clone, Copy)]
pub struct AmleReport {
    pub is_amle: bool,
    pub loglik_gap: f64,
}

/// Compare candidate and reference log-likelihoods given per-observation
/// evaluations of each model.
pub fn amle_check_parts(
    candidate: (&[f64], &[f64]),
    truth: (&[f64], &[f64]),
    f0: &[f64],
    _n: usize,
) -> Result<AmleReport> {
    let cand = loglik_from_parts(candidate.0, candidate.1, f0, Clamping::Floor)?.value;
    let base = loglik_from_parts(truth.0, truth.1, f0, Clamping::Floor)?.value;
    let gap = cand - base;
    Ok(AmleReport { is_amle: gap >= -1e-12, loglik_gap: gap })
}

/// Approximate-MLE check: a candidate qualifies when its joint likelihood is
/// at least that of the reference pair.
pub fn amle_check(
    candidate: (&PriorFn, &SignalDensity),
    truth: (&PriorFn, &SignalDensity),
    f0: &NullDensity,
    data: &Dataset,
) -> Result<AmleReport> {
    let cand = loglik_joint(candidate.0, candidate.1, f0, data)?;
    let base = loglik_joint(truth.0, truth.1, f0, data)?;
    let gap = cand - base;
    Ok(AmleReport { is_amle: gap >= -1e-12, loglik_gap: gap })
}
