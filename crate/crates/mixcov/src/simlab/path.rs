//! Likelihood scan along the scaling submodel: project alpha * pi*(.) onto
//! the logistic class by least squares on the logit scale, refit the signal
//! at the projected prior, and trace the likelihood as alpha varies over
//! its feasible set.

use super::{Replicate, TrueSignal};
use crate::error::{Error, Result};
use crate::linalg::{ols, Mat};
use crate::model::{loglik_from_parts, phi, Clamping, LinkKind, PriorFn};
use crate::optim::{mixture_weights_pgd, GaussKernel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LikelihoodPath {
    /// (alpha, path log-likelihood) per grid point, ascending in alpha.
    pub points: Vec<(f64, f64)>,
    /// Smallest grid alpha whose path likelihood reaches the truth's.
    pub alpha_lo: Option<f64>,
    /// Largest grid alpha whose path likelihood reaches the truth's.
    pub alpha_hi: Option<f64>,
    /// Normalized log-likelihood of the replicate at the true parameters.
    pub ell_star: f64,
    /// Right endpoint of the feasible set (0, sup].
    pub feasible_sup: f64,
}

/// Right endpoint of the feasible set A = (0, 1 / sup_x pi*(x)] for a
/// logistic prior over the unit cube: the linear predictor attains its
/// supremum at a corner.
pub fn feasible_sup(truth_prior: &PriorFn) -> Result<f64> {
    match truth_prior {
        PriorFn::Link { link: LinkKind::Logistic, beta0, beta } => {
            let sup_eta = beta0 + beta.iter().map(|b| b.max(0.0)).sum::<f64>();
            Ok(1.0 / LinkKind::Logistic.eval(sup_eta))
        }
        _ => Err(Error::BadInput(
            "the likelihood path needs a logistic-link truth over unit-cube covariates".into(),
        )),
    }
}

/// Default grid: the feasible set traversed at step 0.01.
pub fn default_path_grid(sup: f64) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut a = 0.01;
    while a <= sup + 1e-12 {
        grid.push((a * 1e9).round() / 1e9);
        a += 0.01;
    }
    grid
}

/// Trace the likelihood along the scaling path for a replicate whose truth
/// is a logistic-link prior and a normal-mixture signal.
pub fn likelihood_path(
    rep: &Replicate,
    truth_prior: &PriorFn,
    truth_signal: &TrueSignal,
    alpha_grid: &[f64],
    atoms: Option<&[f64]>,
) -> Result<LikelihoodPath> {
    let sup = feasible_sup(truth_prior)?;
    if alpha_grid.is_empty() {
        return Err(Error::BadInput("alpha grid must be nonempty".into()));
    }
    for &a in alpha_grid {
        if !(a > 0.0 && a <= sup + 1e-12) {
            return Err(Error::InfeasibleAlpha { alpha: a, sup });
        }
    }
    let mut grid = alpha_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let data = &rep.data;
    let n = data.n();
    let y = data.y();
    let f0_vals: Vec<f64> = y.iter().map(|&v| phi(v)).collect();

    // truth likelihood on this replicate
    let ell_star =
        loglik_from_parts(&rep.pi_true, &rep.f1_true_at_y, &f0_vals, Clamping::Floor)?.value;
    let _ = truth_signal; // the replicate already carries f1* evaluations

    // design with intercept for the logit-scale regression
    let p = data.p();
    let design = {
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut r = Vec::with_capacity(p + 1);
            r.push(1.0);
            r.extend_from_slice(data.x_row(i));
            rows.push(r);
        }
        Mat::from_rows(&rows)
    };

    let default_atoms;
    let atoms = match atoms {
        Some(a) => a,
        None => {
            default_atoms = crate::em::default_atom_grid(y);
            &default_atoms
        }
    };
    let kernel = GaussKernel::new(y, atoms);

    let mut points = Vec::with_capacity(grid.len());
    let mut warm: Option<Vec<f64>> = None;
    let mut pi_hat = vec![0.0; n];
    let mut f1_hat = vec![0.0; n];
    for &alpha in &grid {
        // (i) least squares regression of logit(alpha * pi*) on the design
        let targets: Vec<f64> = rep
            .pi_true
            .iter()
            .map(|&pi| {
                let v = (alpha * pi).clamp(1e-12, 1.0 - 1e-12);
                (v / (1.0 - v)).ln()
            })
            .collect();
        let coef = ols(&design, &targets)?;
        for i in 0..n {
            pi_hat[i] = LinkKind::Logistic.eval(crate::linalg::dot(design.row(i), &coef));
        }
        // (ii) constrained grid MLE of the signal at the projected prior
        let out = mixture_weights_pgd(&kernel, &pi_hat, &f0_vals, warm.as_deref())?;
        kernel.mix(&out.weights, &mut f1_hat);
        warm = Some(out.weights);
        let ell = loglik_from_parts(&pi_hat, &f1_hat, &f0_vals, Clamping::Floor)?.value;
        points.push((alpha, ell));
    }

    let alpha_lo = points.iter().find(|(_, e)| *e >= ell_star).map(|(a, _)| *a);
    let alpha_hi = points.iter().rev().find(|(_, e)| *e >= ell_star).map(|(a, _)| *a);
    Ok(LikelihoodPath { points, alpha_lo, alpha_hi, ell_star, feasible_sup: sup })
}
