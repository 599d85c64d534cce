//! Quasi-Newton fitting of parametric link priors against Bernoulli-type
//! weights, with an optional norm bound enforced through a soft penalty.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Mat};
use crate::model::LinkKind;

/// Options for the link fit.
#[derive(Debug, Clone, Default)]
pub struct LinkObjective {
    /// Include an intercept column (default true).
    pub intercept: bool,
    /// Soft L2 bound: penalty 1e-6 * (||theta||^2 - R^2)_+ when set.
    pub bound_r: Option<f64>,
    /// Warm start for (beta0, beta) packed as one vector.
    pub init: Option<Vec<f64>>,
}

impl LinkObjective {
    pub fn with_intercept() -> Self {
        LinkObjective { intercept: true, bound_r: None, init: None }
    }
}

/// A fitted link prior.
#[derive(Debug, Clone)]
pub struct LinkFit {
    pub beta0: f64,
    pub beta: Vec<f64>,
    pub objective: f64,
    pub grad_norm: f64,
    pub converged: bool,
    /// Set when the divergence guard forced a bounded retry, or when the
    /// design looked rank deficient.
    pub flagged: bool,
}

const DIVERGE_NORM: f64 = 1e6;
const PENALTY: f64 = 1e-6;

/// Maximize (1/n) sum [w_i log g(eta_i) + (1 - w_i) log(1 - g(eta_i))] over
/// the link coefficients by BFGS with an analytic gradient.
///
/// Errors with `Diverged` when the parameter norm passes 1e6 and no bound
/// was requested.
pub fn fit_link_weighted_bernoulli(
    w: &[f64],
    design: &Mat,
    link: LinkKind,
    opts: &LinkObjective,
) -> Result<LinkFit> {
    let n = design.rows();
    assert_eq!(w.len(), n);
    debug_assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
    let q = design.cols() + usize::from(opts.intercept);
    assert!(q >= 1, "link fit needs at least one column");

    let rank_warn = looks_rank_deficient(design, opts.intercept);

    let eval = |theta: &[f64], grad: &mut [f64]| -> Result<f64> {
        let mut obj = 0.0;
        grad.iter_mut().for_each(|g| *g = 0.0);
        for i in 0..n {
            let row = design.row(i);
            let eta = linear_predictor(theta, row, opts.intercept);
            obj += w[i] * link.log_eval(eta) + (1.0 - w[i]) * link.log_one_minus(eta);
            let gfac = w[i] * ratio_deriv_over_g(link, eta)
                - (1.0 - w[i]) * ratio_deriv_over_one_minus_g(link, eta);
            accumulate(grad, row, opts.intercept, gfac);
        }
        let inv_n = 1.0 / n as f64;
        obj *= inv_n;
        grad.iter_mut().for_each(|g| *g *= inv_n);
        if let Some(r) = opts.bound_r {
            let sq = dot(theta, theta);
            if sq > r * r {
                obj -= PENALTY * (sq - r * r);
                for (g, t) in grad.iter_mut().zip(theta) {
                    *g -= PENALTY * 2.0 * t;
                }
            }
        }
        Ok(obj)
    };

    let start = match &opts.init {
        Some(v) => {
            assert_eq!(v.len(), q, "warm start dimension mismatch");
            v.clone()
        }
        None => vec![0.0; q],
    };
    let solved = bfgs_maximize(&eval, start, 500, opts.bound_r.is_none())?;
    let (beta0, beta) = if opts.intercept {
        (solved.x[0], solved.x[1..].to_vec())
    } else {
        (0.0, solved.x.clone())
    };
    Ok(LinkFit {
        beta0,
        beta,
        objective: solved.objective,
        grad_norm: solved.grad_norm,
        converged: solved.converged,
        flagged: rank_warn,
    })
}

/// Link fit with the divergence guard: on `Diverged`, retry once with a soft
/// bound of R = 100 and flag the result.
pub fn fit_link_guarded(
    w: &[f64],
    design: &Mat,
    link: LinkKind,
    opts: &LinkObjective,
) -> Result<LinkFit> {
    match fit_link_weighted_bernoulli(w, design, link, opts) {
        Err(Error::Diverged) if opts.bound_r.is_none() => {
            let retry = LinkObjective { bound_r: Some(100.0), ..opts.clone() };
            let mut fit = fit_link_weighted_bernoulli(w, design, link, &retry)?;
            fit.flagged = true;
            Ok(fit)
        }
        other => other,
    }
}

pub(crate) fn linear_predictor(theta: &[f64], row: &[f64], intercept: bool) -> f64 {
    if intercept {
        theta[0] + dot(&theta[1..], row)
    } else {
        dot(theta, row)
    }
}

fn accumulate(grad: &mut [f64], row: &[f64], intercept: bool, factor: f64) {
    if factor == 0.0 {
        return;
    }
    if intercept {
        grad[0] += factor;
        for (g, x) in grad[1..].iter_mut().zip(row) {
            *g += factor * x;
        }
    } else {
        for (g, x) in grad.iter_mut().zip(row) {
            *g += factor * x;
        }
    }
}

/// g'(z)/g(z), computed in a tail-stable form per link.
fn ratio_deriv_over_g(link: LinkKind, z: f64) -> f64 {
    match link {
        LinkKind::Logistic => 1.0 - link.eval(z),
        LinkKind::Probit => {
            (crate::model::phi(z).max(1e-320).ln() - crate::model::log_std_normal_cdf(z)).exp()
        }
        LinkKind::CLogLog => {
            let t = z.exp();
            if t < 1e-8 {
                1.0 - 0.5 * t
            } else {
                t / t.exp_m1()
            }
        }
    }
}

/// g'(z)/(1 - g(z)), computed in a tail-stable form per link.
fn ratio_deriv_over_one_minus_g(link: LinkKind, z: f64) -> f64 {
    match link {
        LinkKind::Logistic => link.eval(z),
        LinkKind::Probit => {
            (crate::model::phi(z).max(1e-320).ln() - crate::model::log_std_normal_cdf(-z)).exp()
        }
        LinkKind::CLogLog => z.exp(),
    }
}

fn looks_rank_deficient(design: &Mat, intercept: bool) -> bool {
    let q = design.cols() + usize::from(intercept);
    if q > design.rows() {
        return true;
    }
    let mut gram = Mat::zeros(q, q);
    for i in 0..design.rows() {
        let row = design.row(i);
        for a in 0..q {
            let va = if intercept {
                if a == 0 { 1.0 } else { row[a - 1] }
            } else {
                row[a]
            };
            for b in a..q {
                let vb = if intercept {
                    if b == 0 { 1.0 } else { row[b - 1] }
                } else {
                    row[b]
                };
                gram.add_assign(a, b, va * vb);
            }
        }
    }
    for a in 0..q {
        for b in 0..a {
            let v = gram.get(b, a);
            gram.set(a, b, v);
        }
    }
    match crate::linalg::cond_inf(&gram) {
        Ok(c) => c > 1e12,
        Err(_) => true,
    }
}

pub struct BfgsResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Dense BFGS ascent with backtracking line search. `guard` enables the
/// parameter-norm divergence check.
pub fn bfgs_maximize(
    eval: &dyn Fn(&[f64], &mut [f64]) -> Result<f64>,
    x0: Vec<f64>,
    max_iter: usize,
    guard: bool,
) -> Result<BfgsResult> {
    let q = x0.len();
    let mut x = x0;
    let mut grad = vec![0.0; q];
    let mut obj = eval(&x, &mut grad)?;

    // inverse Hessian approximation
    let mut h = Mat::zeros(q, q);
    for i in 0..q {
        h.set(i, i, 1.0);
    }

    let mut converged = false;
    for _ in 0..max_iter {
        let gnorm = norm2(&grad);
        if gnorm <= 1e-6 * obj.abs().max(1.0) {
            converged = true;
            break;
        }
        // ascent direction d = H g
        let mut dir = vec![0.0; q];
        for i in 0..q {
            dir[i] = dot(h.row(i), &grad);
        }
        let mut slope = dot(&dir, &grad);
        if slope <= 0.0 {
            // reset to steepest ascent if curvature info went bad
            for i in 0..q {
                for j in 0..q {
                    h.set(i, j, if i == j { 1.0 } else { 0.0 });
                }
            }
            dir.copy_from_slice(&grad);
            slope = gnorm * gnorm;
        }

        let mut step = 1.0;
        let mut new_x;
        let mut new_grad = vec![0.0; q];
        let mut new_obj;
        loop {
            new_x = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect::<Vec<f64>>();
            new_obj = eval(&new_x, &mut new_grad)?;
            if new_obj >= obj + 1e-4 * step * slope {
                break;
            }
            step *= 0.5;
            if step < 1e-16 {
                new_x = x.clone();
                new_obj = obj;
                new_grad.copy_from_slice(&grad);
                break;
            }
        }
        if step < 1e-16 {
            converged = norm2(&grad) <= 1e-6 * obj.abs().max(1.0);
            break;
        }

        if guard && norm2(&new_x) > DIVERGE_NORM {
            return Err(Error::Diverged);
        }

        // BFGS inverse update
        let s: Vec<f64> = new_x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = -dot(&s, &yv); // ascent: gradient differences flip sign
        if sy > 1e-12 * norm2(&s) * norm2(&yv) {
            let rho = 1.0 / sy;
            // H <- (I - rho s y~') H (I - rho y~ s') + rho s s' with y~ = -yv
            let mut hy = vec![0.0; q];
            for i in 0..q {
                hy[i] = -dot(h.row(i), &yv);
            }
            let yhy = -dot(&yv, &hy);
            for i in 0..q {
                for j in 0..q {
                    let upd = h.get(i, j)
                        - rho * (s[i] * hy[j] + hy[i] * s[j])
                        + rho * rho * yhy * s[i] * s[j]
                        + rho * s[i] * s[j];
                    h.set(i, j, upd);
                }
            }
        }
        x = new_x;
        grad = new_grad;
        obj = new_obj;
    }

    let grad_norm = norm2(&grad);
    if !converged {
        converged = grad_norm <= 1e-6 * obj.abs().max(1.0);
    }
    Ok(BfgsResult { x, objective: obj, grad_norm, converged })
}
