//! Weighted Gaussian MLE for the parametric signal class.

use crate::error::{Error, Result};
use crate::model::SignalDensity;

const VARIANCE_FLOOR: f64 = 1e-8;

/// Closed-form weighted MLE: mu = sum w y / sum w and
/// sigma2 = sum w (y - mu)^2 / sum w.
pub fn fit_param_normal_weighted(w: &[f64], y: &[f64]) -> Result<SignalDensity> {
    assert_eq!(w.len(), y.len());
    let wsum: f64 = w.iter().sum();
    if wsum <= 0.0 {
        return Err(Error::WeightsAllZero);
    }
    let mu: f64 = w.iter().zip(y).map(|(wi, yi)| wi * yi).sum::<f64>() / wsum;
    let sigma2: f64 = w
        .iter()
        .zip(y)
        .map(|(wi, yi)| wi * (yi - mu) * (yi - mu))
        .sum::<f64>()
        / wsum;
    if sigma2 <= VARIANCE_FLOOR {
        return Err(Error::DegenerateVariance);
    }
    Ok(SignalDensity::ParamNormal { mu, sigma2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_weights_reduce_to_sample_moments() {
        let y = [1.0, 2.0, 3.0, 6.0];
        let fit = fit_param_normal_weighted(&[1.0; 4], &y).unwrap();
        match fit {
            SignalDensity::ParamNormal { mu, sigma2 } => {
                assert!((mu - 3.0).abs() < 1e-15);
                // divisor n
                let expected = y.iter().map(|v| (v - 3.0f64).powi(2)).sum::<f64>() / 4.0;
                assert!((sigma2 - expected).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_effective_point_has_degenerate_variance() {
        assert!(matches!(
            fit_param_normal_weighted(&[1.0, 0.0], &[3.0, 100.0]),
            Err(Error::DegenerateVariance)
        ));
    }

    #[test]
    fn two_point_arithmetic() {
        let fit = fit_param_normal_weighted(&[1.0, 1.0], &[0.0, 2.0]).unwrap();
        assert_eq!(fit, SignalDensity::ParamNormal { mu: 1.0, sigma2: 1.0 });
    }

    #[test]
    fn zero_weights_error() {
        assert!(matches!(
            fit_param_normal_weighted(&[0.0, 0.0], &[1.0, 2.0]),
            Err(Error::WeightsAllZero)
        ));
    }
}
