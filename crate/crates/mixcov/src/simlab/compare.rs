//! Signal-density estimation with and without covariate information:
//! the marginal two-groups fit at known overall proportion versus the
//! plug-in fit at the known prior function.

use super::{pibar, simulate, Replicate, SimSetting, TrueSignal};
use crate::error::Result;
use crate::model::{hellinger_sq_quad, phi};
use crate::optim::{mixture_weights_pgd, GaussKernel};

/// Hellinger distance between a fitted grid mixture (given by atoms and
/// weights) and the data-generating signal density.
pub fn hellinger_distance_to_truth(
    atoms: &[f64],
    weights: &[f64],
    truth: &TrueSignal,
) -> f64 {
    let fitted = |y: f64| -> f64 {
        atoms.iter().zip(weights).map(|(&a, &w)| w * phi(y - a)).sum()
    };
    let (tlo, thi) = truth.effective_range();
    let lo = tlo.min(atoms[0]) - 6.0;
    let hi = thi.max(*atoms.last().unwrap()) + 6.0;
    hellinger_sq_quad(fitted, |y| truth.pdf(y), lo, hi, 2001).sqrt()
}

/// For each replicate fit the signal density twice: once from the marginal
/// two-groups model with the overall proportion treated as known, and once
/// from the joint model with the prior function treated as known. Returns
/// the paired Hellinger distances (covariate-aware, marginal).
pub fn compare_f1_with_without_covariates(
    setting: &SimSetting,
    replicates: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let truth = setting.f1_id.density();
    let alpha_bar = pibar(setting.s_id);
    let mut with_cov = Vec::with_capacity(replicates);
    let mut marginal = Vec::with_capacity(replicates);
    for r in 0..replicates {
        let rep_setting = SimSetting { seed: setting.replicate_seed(r as u64), ..*setting };
        let rep: Replicate = simulate(&rep_setting);
        let y = rep.data.y();
        let atoms = crate::em::default_atom_grid(y);
        let kernel = GaussKernel::new(y, &atoms);
        let f0_vals: Vec<f64> = y.iter().map(|&v| phi(v)).collect();

        // prior function known: per-observation proportions
        let cov_fit = mixture_weights_pgd(&kernel, &rep.pi_true, &f0_vals, None)?;
        with_cov.push(hellinger_distance_to_truth(&atoms, &cov_fit.weights, &truth));

        // overall proportion known: constant mixing weight
        let marg_fit =
            mixture_weights_pgd(&kernel, &vec![alpha_bar; y.len()], &f0_vals, None)?;
        marginal.push(hellinger_distance_to_truth(&atoms, &marg_fit.weights, &truth));
    }
    Ok((with_cov, marginal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simlab::{F1Kind, SKind};

    #[test]
    fn zero_replicates_yield_empty_vectors() {
        let setting = SimSetting::new(SKind::A, F1Kind::I, 100, 3);
        let (a, b) = compare_f1_with_without_covariates(&setting, 0).unwrap();
        assert!(a.is_empty() && b.is_empty());
    }

    #[test]
    fn constant_prior_makes_both_estimators_coincide() {
        // with a constant prior surface the per-observation proportions are
        // all equal to the overall proportion, so the two fits agree
        let setting = SimSetting::new(SKind::A, F1Kind::I, 400, 9);
        let rep = simulate(&setting);
        let y = rep.data.y();
        let atoms = crate::em::default_atom_grid(y);
        let kernel = GaussKernel::new(y, &atoms);
        let f0_vals: Vec<f64> = y.iter().map(|&v| phi(v)).collect();
        let alpha = 0.4;
        let a = mixture_weights_pgd(&kernel, &vec![alpha; y.len()], &f0_vals, None).unwrap();
        let b = mixture_weights_pgd(&kernel, &vec![alpha; y.len()], &f0_vals, None).unwrap();
        for (x, z) in a.weights.iter().zip(&b.weights) {
            assert_eq!(x, z);
        }
    }

    #[test]
    fn hellinger_to_truth_is_zero_for_the_truth_itself() {
        // approximate the truth by a dense atom representation of itself
        let truth = TrueSignal::new(vec![1.0], vec![0.5], vec![1.0]);
        // N(0.5, 1) as a unit-variance location mixture is a point mass at 0.5
        let d = hellinger_distance_to_truth(&[0.0, 0.5], &[0.0, 1.0], &truth);
        assert!(d < 1e-6, "distance {d}");
    }
}
