//! Marginal estimation routes: the profiled one-dimensional MLE of the
//! overall signal proportion, and the nonlinear least squares route with
//! its sandwich covariance.

use crate::error::{Error, Result};
use crate::linalg::{cond_inf, dot, invert, Mat};
use crate::model::{
    lfdr_from_parts, loglik_from_parts, Clamping, Dataset, LinkKind, MixingMeasure, NullDensity,
    PriorFn, SignalDensity, DENSITY_FLOOR,
};
use crate::optim::{mixture_weights_pgd, GaussKernel};
use serde::{Deserialize, Serialize};

/// Prior classes available to the profile method.
pub use crate::em::PiClass;

/// Result of the profile method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Marginal1Result {
    /// Grid point attaining the profiled maximum (ties toward smaller alpha).
    pub pibar_hat: f64,
    pub f1_hat: SignalDensity,
    pub pi_hat: PriorFn,
    /// Full (alpha, profiled log-likelihood) path for diagnostics.
    pub profile: Vec<(f64, f64)>,
    /// Set when the prior objective was flat at the selected alpha.
    pub degenerate: bool,
}

/// Result of the least squares method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Marginal2Result {
    pub beta0: f64,
    pub beta: Vec<f64>,
    /// Estimated signal mean (on the original response scale).
    pub mu: f64,
    /// Sandwich estimate of the asymptotic covariance of sqrt(n)(theta - theta*),
    /// ordered (beta0, beta, mu); absent when the empirical Hessian is
    /// numerically singular (saturated link fits at small n).
    pub covariance: Option<Mat>,
    pub f1_hat: SignalDensity,
    pub mu_grid: Vec<f64>,
    pub sse: f64,
    pub flagged: bool,
}

/// A fitted prior along with degeneracy information.
#[derive(Debug, Clone)]
pub struct PriorFit {
    pub prior: PriorFn,
    pub degenerate: bool,
    pub flagged: bool,
}

/// Maximize the marginal mixture likelihood over grid Gaussian mixtures at a
/// fixed mixing proportion alpha.
pub fn marginal1_f1(
    alpha: f64,
    y: &[f64],
    f0: &NullDensity,
    atoms: &[f64],
) -> Result<SignalDensity> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::BadInput(format!("alpha must lie in (0,1], got {alpha}")));
    }
    let kernel = GaussKernel::new(y, atoms);
    let f0_vals: Vec<f64> = y.iter().map(|&v| f0.pdf(v)).collect();
    let out = mixture_weights_pgd(&kernel, &vec![alpha; y.len()], &f0_vals, None)?;
    Ok(SignalDensity::GaussMix(MixingMeasure::from_grid(atoms, &out.weights)?))
}

/// Grid-mixture fit with per-observation proportions pi(X_i) plugged in.
pub fn marginal2_f1(
    pi_hat: &PriorFn,
    data: &Dataset,
    f0: &NullDensity,
    atoms: &[f64],
) -> Result<SignalDensity> {
    let alpha = pi_hat.eval_all(data);
    let kernel = GaussKernel::new(data.y(), atoms);
    let f0_vals: Vec<f64> = data.y().iter().map(|&v| f0.pdf(v)).collect();
    let out = mixture_weights_pgd(&kernel, &alpha, &f0_vals, None)?;
    Ok(SignalDensity::GaussMix(MixingMeasure::from_grid(atoms, &out.weights)?))
}

/// Maximize the joint log-likelihood over the prior class with the signal
/// density held fixed.
pub fn marginal1_pi(
    f1_hat: &SignalDensity,
    data: &Dataset,
    f0: &NullDensity,
    pi_class: PiClass,
    iso_covariate: usize,
) -> Result<PriorFit> {
    let n = data.n();
    let f1_vals: Vec<f64> = data.y().iter().map(|&v| f1_hat.pdf(v)).collect();
    let f0_vals: Vec<f64> = data.y().iter().map(|&v| f0.pdf(v)).collect();
    fit_prior_given_f1(&f1_vals, &f0_vals, data, pi_class, iso_covariate, None, n)
}

/// Shared implementation working from precomputed density values; `warm`
/// optionally warm-starts the link coefficients.
pub(crate) fn fit_prior_given_f1(
    f1_vals: &[f64],
    f0_vals: &[f64],
    data: &Dataset,
    pi_class: PiClass,
    iso_covariate: usize,
    warm: Option<&[f64]>,
    n: usize,
) -> Result<PriorFit> {
    // flat objective: the prior is unidentified when f1 = f0 on the sample
    let scale = f0_vals.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-12);
    let degenerate = f1_vals
        .iter()
        .zip(f0_vals)
        .all(|(a, b)| (a - b).abs() <= 1e-12 * scale);
    if degenerate {
        let prior = canonical_prior(pi_class, data, iso_covariate);
        return Ok(PriorFit { prior, degenerate: true, flagged: false });
    }

    match pi_class {
        PiClass::Constant => {
            let obj = |p: f64| -> f64 {
                let mut s = 0.0;
                for i in 0..n {
                    s += (p * f1_vals[i] + (1.0 - p) * f0_vals[i]).max(DENSITY_FLOOR).ln();
                }
                s / n as f64
            };
            let p = golden_section_max(obj, 1e-8, 1.0 - 1e-8, 1e-10);
            Ok(PriorFit { prior: PriorFn::Constant { value: p }, degenerate: false, flagged: false })
        }
        PiClass::Isotonic => {
            if data.p() <= iso_covariate {
                return Err(Error::BadInput("isotonic prior needs an ordering covariate".into()));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| {
                data.x()
                    .get(i, iso_covariate)
                    .partial_cmp(&data.x().get(j, iso_covariate))
                    .unwrap()
            });
            // EM-style ascent: responsibility weights followed by bounded
            // isotonic least squares, iterated to a fixed point
            let mut pi = vec![0.5; n];
            for _ in 0..10_000 {
                let w: Vec<f64> = (0..n)
                    .map(|i| {
                        let s = pi[i] * f1_vals[i];
                        let den = (s + (1.0 - pi[i]) * f0_vals[i]).max(DENSITY_FLOOR);
                        s / den
                    })
                    .collect();
                let targets: Vec<f64> = order.iter().map(|&i| w[i]).collect();
                let fitted =
                    crate::optim::weighted_isotonic_ls(&targets, &vec![1.0; n], Some((0.0, 1.0)));
                let mut next = vec![0.0; n];
                for (slot, &i) in order.iter().enumerate() {
                    next[i] = fitted[slot];
                }
                let delta = pi
                    .iter()
                    .zip(&next)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                pi = next;
                if delta < 1e-10 {
                    break;
                }
            }
            let xs: Vec<f64> = order.iter().map(|&i| data.x().get(i, iso_covariate)).collect();
            let values: Vec<f64> = order.iter().map(|&i| pi[i]).collect();
            Ok(PriorFit {
                prior: PriorFn::Isotonic { covariate: iso_covariate, xs, values },
                degenerate: false,
                flagged: false,
            })
        }
        _ => {
            let link = pi_class.link().unwrap();
            let q = data.p() + 1;
            let eval = |theta: &[f64], grad: &mut [f64]| -> Result<f64> {
                let mut obj = 0.0;
                grad.iter_mut().for_each(|g| *g = 0.0);
                for i in 0..n {
                    let row = data.x_row(i);
                    let eta = theta[0] + dot(&theta[1..], row);
                    let g = link.eval(eta);
                    let mix = (g * f1_vals[i] + (1.0 - g) * f0_vals[i]).max(DENSITY_FLOOR);
                    obj += mix.ln();
                    let factor = (f1_vals[i] - f0_vals[i]) * link.deriv(eta) / mix;
                    grad[0] += factor;
                    for (gslot, &x) in grad[1..].iter_mut().zip(row) {
                        *gslot += factor * x;
                    }
                }
                let inv_n = 1.0 / n as f64;
                grad.iter_mut().for_each(|g| *g *= inv_n);
                Ok(obj * inv_n)
            };
            let start = warm.map(|w| w.to_vec()).unwrap_or_else(|| vec![0.0; q]);
            match crate::optim::bfgs_maximize(&eval, start.clone(), 500, true) {
                Ok(res) => Ok(PriorFit {
                    prior: PriorFn::Link { link, beta0: res.x[0], beta: res.x[1..].to_vec() },
                    degenerate: false,
                    flagged: false,
                }),
                Err(Error::Diverged) => {
                    // soft-bounded retry, mirroring the link M-step guard
                    let eval_pen = |theta: &[f64], grad: &mut [f64]| -> Result<f64> {
                        let mut obj = eval(theta, grad)?;
                        let sq = dot(theta, theta);
                        let r2 = 100.0 * 100.0;
                        if sq > r2 {
                            obj -= 1e-6 * (sq - r2);
                            for (g, t) in grad.iter_mut().zip(theta) {
                                *g -= 2e-6 * t;
                            }
                        }
                        Ok(obj)
                    };
                    let res = crate::optim::bfgs_maximize(&eval_pen, start, 500, false)?;
                    Ok(PriorFit {
                        prior: PriorFn::Link { link, beta0: res.x[0], beta: res.x[1..].to_vec() },
                        degenerate: false,
                        flagged: true,
                    })
                }
                Err(e) => Err(e),
            }
        }
    }
}

fn canonical_prior(pi_class: PiClass, data: &Dataset, iso_covariate: usize) -> PriorFn {
    match pi_class {
        PiClass::Constant => PriorFn::Constant { value: 0.5 },
        PiClass::Isotonic => {
            let n = data.n();
            let mut xs: Vec<f64> = (0..n)
                .map(|i| data.x().get(i, iso_covariate.min(data.p().saturating_sub(1))))
                .collect();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            PriorFn::Isotonic { covariate: iso_covariate, xs, values: vec![0.5; n] }
        }
        other => PriorFn::Link {
            link: other.link().unwrap_or(LinkKind::Logistic),
            beta0: 0.0,
            beta: vec![0.0; data.p()],
        },
    }
}

fn golden_section_max(obj: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > tol {
        let a = hi - inv_phi * (hi - lo);
        let b = lo + inv_phi * (hi - lo);
        if obj(a) < obj(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    0.5 * (lo + hi)
}

/// Options for the profile search.
#[derive(Debug, Clone)]
pub struct ProfileOptions {
    /// Alpha grid; defaults to 0.01..=1.00 in steps of 0.01.
    pub grid: Option<Vec<f64>>,
    /// Second pass at step 0.002 within +-0.02 of the first-pass argmax.
    pub refine: bool,
    pub pi_class: PiClass,
    pub iso_covariate: usize,
    /// Atom grid override.
    pub atoms: Option<Vec<f64>>,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            grid: None,
            refine: false,
            pi_class: PiClass::LinkLogistic,
            iso_covariate: 0,
            atoms: None,
        }
    }
}

pub fn default_alpha_grid() -> Vec<f64> {
    (1..=100).map(|k| k as f64 / 100.0).collect()
}

/// Profile the overall signal proportion: for each alpha on the grid fit
/// f1 from the marginal likelihood, then the prior from the joint
/// likelihood, and keep the alpha with the highest profiled value.
pub fn marginal1_profile(
    data: &Dataset,
    f0: &NullDensity,
    opts: &ProfileOptions,
) -> Result<Marginal1Result> {
    let grid = match &opts.grid {
        Some(g) => g.clone(),
        None => default_alpha_grid(),
    };
    if grid.is_empty() || grid.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
        return Err(Error::BadInput("alpha grid must be nonempty within (0,1]".into()));
    }
    let atoms = opts
        .atoms
        .clone()
        .unwrap_or_else(|| crate::em::default_atom_grid(data.y()));
    let kernel = GaussKernel::new(data.y(), &atoms);
    let f0_vals: Vec<f64> = data.y().iter().map(|&v| f0.pdf(v)).collect();

    let mut pass = scan_profile(&grid, data, &kernel, &f0_vals, opts)?;
    if opts.refine {
        let center = pass.best_alpha;
        let mut fine: Vec<f64> = Vec::new();
        let mut a = (center - 0.02).max(0.002);
        while a <= (center + 0.02).min(1.0) + 1e-12 {
            fine.push((a * 1e9).round() / 1e9);
            a += 0.002;
        }
        let second = scan_profile(&fine, data, &kernel, &f0_vals, opts)?;
        if second.best_value > pass.best_value {
            pass.best_alpha = second.best_alpha;
            pass.best_value = second.best_value;
            pass.best_weights = second.best_weights;
            pass.best_prior = second.best_prior;
            pass.best_degenerate = second.best_degenerate;
        }
        pass.profile.extend(second.profile);
        pass.profile
            .sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        pass.profile.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12);
    }

    let f1_hat = SignalDensity::GaussMix(MixingMeasure::from_grid(&atoms, &pass.best_weights)?);
    Ok(Marginal1Result {
        pibar_hat: pass.best_alpha,
        f1_hat,
        pi_hat: pass.best_prior,
        profile: pass.profile,
        degenerate: pass.best_degenerate,
    })
}

struct ProfilePass {
    profile: Vec<(f64, f64)>,
    best_alpha: f64,
    best_value: f64,
    best_weights: Vec<f64>,
    best_prior: PriorFn,
    best_degenerate: bool,
}

fn scan_profile(
    grid: &[f64],
    data: &Dataset,
    kernel: &GaussKernel,
    f0_vals: &[f64],
    opts: &ProfileOptions,
) -> Result<ProfilePass> {
    let n = data.n();
    let mut sorted_grid = grid.to_vec();
    sorted_grid.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut profile = Vec::with_capacity(sorted_grid.len());
    let mut best: Option<(f64, f64, Vec<f64>, PriorFn, bool)> = None;
    let mut warm_weights: Option<Vec<f64>> = None;
    let mut warm_theta: Option<Vec<f64>> = None;
    let mut f1_vals = vec![0.0; n];

    for &alpha in &sorted_grid {
        let out = mixture_weights_pgd(
            kernel,
            &vec![alpha; n],
            f0_vals,
            warm_weights.as_deref(),
        )?;
        kernel.mix(&out.weights, &mut f1_vals);
        warm_weights = Some(out.weights.clone());

        let fit = fit_prior_given_f1(
            &f1_vals,
            f0_vals,
            data,
            opts.pi_class,
            opts.iso_covariate,
            warm_theta.as_deref(),
            n,
        )?;
        if let PriorFn::Link { beta0, beta, .. } = &fit.prior {
            let mut t = Vec::with_capacity(beta.len() + 1);
            t.push(*beta0);
            t.extend_from_slice(beta);
            warm_theta = Some(t);
        }
        let pi_vals = fit.prior.eval_all(data);
        let value = loglik_from_parts(&pi_vals, &f1_vals, f0_vals, Clamping::Floor)?.value;
        profile.push((alpha, value));
        let improved = match &best {
            None => true,
            Some((_, bv, _, _, _)) => value > *bv, // ties keep the smaller alpha
        };
        if improved {
            best = Some((alpha, value, out.weights, fit.prior, fit.degenerate));
        }
    }
    let (best_alpha, best_value, best_weights, best_prior, best_degenerate) = best.unwrap();
    Ok(ProfilePass { profile, best_alpha, best_value, best_weights, best_prior, best_degenerate })
}

/// Options for the least squares method.
#[derive(Debug, Clone)]
pub struct LseOptions {
    pub link: LinkKind,
    /// Mu grid on the original response scale; defaults to 41 equispaced
    /// points on mu0 +- 1.2 max|Y - mu0| with the mu0 ball excluded.
    pub mu_grid: Option<Vec<f64>>,
    /// Atom grid for the plug-in f1 fit.
    pub atoms: Option<Vec<f64>>,
}

impl Default for LseOptions {
    fn default() -> Self {
        LseOptions { link: LinkKind::Logistic, mu_grid: None, atoms: None }
    }
}

/// Least squares estimation of the prior coefficients and the signal mean
/// from the regression E(Y | X = x) = mu0 + pi(x) (mu - mu0): fix mu, fit
/// the coefficients by quasi-Newton, and take the grid minimizer.
pub fn marginal2_lse(
    data: &Dataset,
    f0: &NullDensity,
    opts: &LseOptions,
) -> Result<Marginal2Result> {
    let n = data.n();
    let mu0 = f0.mean();
    let yc: Vec<f64> = data.y().iter().map(|&v| v - mu0).collect();

    let grid: Vec<f64> = match &opts.mu_grid {
        Some(g) => g.clone(),
        None => {
            let spread = yc.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let half = 1.2 * spread;
            (0..41).map(|k| mu0 - half + 2.0 * half * k as f64 / 40.0).collect()
        }
    };
    let usable: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|&mu| (mu - mu0).abs() > 1e-6)
        .collect();
    if usable.is_empty() {
        return Err(Error::MuGridDegenerate);
    }

    let link = opts.link;
    let q = data.p() + 1;
    let mut best: Option<(f64, Vec<f64>, f64)> = None; // (mean squared error, theta, mu_centered)
    let mut warm: Option<Vec<f64>> = None;
    let mut flagged = false;

    for &mu in &usable {
        let muc = mu - mu0;
        // maximize the negative mean squared error; the 1/n scaling keeps
        // the objective on the same footing as the likelihood solvers
        let eval = |theta: &[f64], grad: &mut [f64]| -> Result<f64> {
            let mut obj = 0.0;
            grad.iter_mut().for_each(|g| *g = 0.0);
            for i in 0..n {
                let row = data.x_row(i);
                let eta = theta[0] + dot(&theta[1..], row);
                let g = link.eval(eta);
                let r = yc[i] - muc * g;
                obj -= r * r;
                let factor = 2.0 * r * muc * link.deriv(eta);
                grad[0] += factor;
                for (gs, &x) in grad[1..].iter_mut().zip(row) {
                    *gs += factor * x;
                }
            }
            let inv_n = 1.0 / n as f64;
            grad.iter_mut().for_each(|g| *g *= inv_n);
            Ok(obj * inv_n)
        };
        // the squared loss is not concave in the coefficients: try the warm
        // start carried along the grid and a fresh zero start, keep the best
        let mut starts: Vec<Vec<f64>> = vec![vec![0.0; q]];
        if let Some(wstart) = &warm {
            starts.push(wstart.clone());
        }
        let mut local: Option<crate::optim::BfgsResult> = None;
        for start in starts {
            let res = match crate::optim::bfgs_maximize(&eval, start.clone(), 500, true) {
                Ok(r) => r,
                Err(Error::Diverged) => {
                    flagged = true;
                    let eval_pen = |theta: &[f64], grad: &mut [f64]| -> Result<f64> {
                        let mut obj = eval(theta, grad)?;
                        let sq = dot(theta, theta);
                        let r2 = 100.0 * 100.0;
                        if sq > r2 {
                            obj -= 1e-6 * (sq - r2);
                            for (g, t) in grad.iter_mut().zip(theta) {
                                *g -= 2e-6 * t;
                            }
                        }
                        Ok(obj)
                    };
                    crate::optim::bfgs_maximize(&eval_pen, start, 500, false)?
                }
                Err(e) => return Err(e),
            };
            if local.as_ref().map_or(true, |cur| res.objective > cur.objective) {
                local = Some(res);
            }
        }
        let res = local.unwrap();
        warm = Some(res.x.clone());
        let mse = -res.objective;
        let better = best.as_ref().map_or(true, |(b, _, _)| mse < *b);
        if better {
            best = Some((mse, res.x, muc));
        }
    }
    let (mse, theta, muc) = best.unwrap();
    let sse = mse * n as f64;
    let beta0 = theta[0];
    let beta = theta[1..].to_vec();
    let mu_star = mu0 + muc;

    let covariance = match sandwich_cov(beta0, &beta, mu_star, data, f0, link) {
        Ok(c) => Some(c),
        Err(Error::SingularHessian) => {
            flagged = true;
            None
        }
        Err(e) => return Err(e),
    };

    let atoms = opts
        .atoms
        .clone()
        .unwrap_or_else(|| crate::em::default_atom_grid(data.y()));
    let pi_hat = PriorFn::Link { link, beta0, beta: beta.clone() };
    let f1_hat = match marginal2_f1(&pi_hat, data, f0, &atoms) {
        Ok(f1) => f1,
        Err(Error::WeightsAllZero) => {
            // pi vanished everywhere: the plug-in objective carries no
            // information about f1, so fall back to the flat grid mixture
            flagged = true;
            let m = atoms.len();
            SignalDensity::GaussMix(MixingMeasure::new(atoms.clone(), vec![1.0 / m as f64; m])?)
        }
        Err(e) => return Err(e),
    };

    Ok(Marginal2Result {
        beta0,
        beta,
        mu: mu_star,
        covariance,
        f1_hat,
        mu_grid: usable,
        sse,
        flagged,
    })
}

/// Sandwich covariance V^-1 E[grad grad'] V^-1 for the least squares
/// criterion, with V the analytic average Hessian of
/// m_theta = -(y - mu_c g(eta))^2 over the sample. Returns the asymptotic
/// covariance of sqrt(n)(theta_hat - theta*), ordered (beta0, beta, mu).
pub fn sandwich_cov(
    beta0: f64,
    beta: &[f64],
    mu: f64,
    data: &Dataset,
    f0: &NullDensity,
    link: LinkKind,
) -> Result<Mat> {
    let n = data.n();
    let p = data.p();
    let d = p + 2;
    let mu0 = f0.mean();
    let muc = mu - mu0;

    let mut v = Mat::zeros(d, d);
    let mut meat = Mat::zeros(d, d);
    let mut xt = vec![0.0; p + 1];
    for i in 0..n {
        let row = data.x_row(i);
        xt[0] = 1.0;
        xt[1..].copy_from_slice(row);
        let eta = beta0 + dot(beta, row);
        let g = link.eval(eta);
        let g1 = link.deriv(eta);
        let g2 = link.deriv2(eta);
        let r = (data.y()[i] - mu0) - muc * g;

        // gradient of m = -(r)^2: (2 r muc g1 x~, 2 r g)
        let mut grad = vec![0.0; d];
        for a in 0..=p {
            grad[a] = 2.0 * r * muc * g1 * xt[a];
        }
        grad[p + 1] = 2.0 * r * g;

        for a in 0..d {
            for b in a..d {
                meat.add_assign(a, b, grad[a] * grad[b]);
            }
        }

        // Hessian blocks
        let hbb = 2.0 * muc * (r * g2 - muc * g1 * g1);
        let hbm = 2.0 * g1 * (r - muc * g);
        let hmm = -2.0 * g * g;
        for a in 0..=p {
            for b in a..=p {
                v.add_assign(a, b, hbb * xt[a] * xt[b]);
            }
            v.add_assign(a, p + 1, hbm * xt[a]);
        }
        v.add_assign(p + 1, p + 1, hmm);
    }
    let inv_n = 1.0 / n as f64;
    for a in 0..d {
        for b in a..d {
            let vv = v.get(a, b) * inv_n;
            v.set(a, b, vv);
            v.set(b, a, vv);
            let mm = meat.get(a, b) * inv_n;
            meat.set(a, b, mm);
            meat.set(b, a, mm);
        }
    }

    if cond_inf(&v)? >= 1e12 {
        return Err(Error::SingularHessian);
    }
    let vinv = invert(&v)?;

    // S = Vinv * meat * Vinv, symmetrized exactly
    let mut tmp = Mat::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += vinv.get(a, k) * meat.get(k, b);
            }
            tmp.set(a, b, s);
        }
    }
    let mut out = Mat::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let mut s = 0.0;
            for k in 0..d {
                s += tmp.get(a, k) * vinv.get(k, b);
            }
            let mut t = 0.0;
            for k in 0..d {
                t += tmp.get(b, k) * vinv.get(k, a);
            }
            let sym = 0.5 * (s + t);
            out.set(a, b, sym);
            out.set(b, a, sym);
        }
    }
    Ok(out)
}

/// Per-observation lFDRs from any (prior, signal) pair; exposed for the
/// downstream testing pipeline.
pub fn plugin_lfdr(
    prior: &PriorFn,
    f1: &SignalDensity,
    f0: &NullDensity,
    data: &Dataset,
) -> Result<Vec<f64>> {
    let pi = prior.eval_all(data);
    let f1v: Vec<f64> = data.y().iter().map(|&v| f1.pdf(v)).collect();
    let f0v: Vec<f64> = data.y().iter().map(|&v| f0.pdf(v)).collect();
    lfdr_from_parts(&pi, &f1v, &f0v, Clamping::Floor)
}
