//! Projected gradient ascent over the probability simplex for grid-mixture
//! likelihoods, with the step-halving rule that guarantees monotone ascent.

use super::simplex_project;
use crate::error::{Error, Result};
use crate::linalg::pairwise_sum;
use crate::model::{phi, MixingMeasure, DENSITY_FLOOR};

/// Cached n x m matrix of phi(Y_i - a_j) values; shared across PGD calls
/// that reuse the same sample and atom grid.
pub struct GaussKernel {
    n: usize,
    m: usize,
    data: Vec<f64>,
    atoms: Vec<f64>,
}

impl GaussKernel {
    pub fn new(y: &[f64], atoms: &[f64]) -> Self {
        let (n, m) = (y.len(), atoms.len());
        let mut data = Vec::with_capacity(n * m);
        for &yi in y {
            for &a in atoms {
                data.push(phi(yi - a));
            }
        }
        GaussKernel { n, m, data, atoms: atoms.to_vec() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    /// Mixture values (K p)_i for all i.
    pub fn mix(&self, p: &[f64], out: &mut [f64]) {
        debug_assert_eq!(p.len(), self.m);
        debug_assert_eq!(out.len(), self.n);
        for i in 0..self.n {
            out[i] = crate::linalg::dot(self.row(i), p);
        }
    }

    /// Column j of the kernel (the mixture under a point mass at atom j).
    pub fn col_mix<'a>(&self, j: usize, out: &'a mut [f64]) -> &'a [f64] {
        debug_assert_eq!(out.len(), self.n);
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.data[i * self.m + j];
        }
        out
    }

    /// out += factor * column j.
    pub fn add_col(&self, j: usize, factor: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n);
        for (i, slot) in out.iter_mut().enumerate() {
            *slot += factor * self.data[i * self.m + j];
        }
    }
}

/// Result of one PGD solve.
#[derive(Debug, Clone)]
pub struct PgdOutcome {
    pub weights: Vec<f64>,
    pub objective: f64,
    /// Objective after every accepted step (nondecreasing by construction).
    pub trace: Vec<f64>,
    pub accepted_steps: usize,
    pub converged: bool,
}

const MAX_ACCEPTED_STEPS: usize = 2000;
const MAX_HALVINGS: usize = 60;
// duality-gap certificate: for a concave objective over the simplex,
// max_j g_j - <g, p> bounds the remaining suboptimality
const GAP_TOL: f64 = 1e-10;
// largest active set handed to the Newton refinement (the KKT build is
// O(n k^2); beyond this the first-order steps prune the support first)
const NEWTON_MAX: usize = 32;

/// Shared solver core for grid-mixture likelihoods. The per-observation
/// model is
///   den_i = scale_i * (K p)_i + base_i,
/// and the objective is (1/n) sum logw_i * ln(den_i), concave over the
/// simplex, with gradient u_j = (1/n) sum_i logw_i * scale_i * K_ij / den_i.
///
/// With scale = w, base = 0, logw = w this is the weighted grid NPMLE; with
/// scale = alpha, base = (1-alpha) f0, logw = 1 it is the marginal-mixture
/// objective.
///
/// The iteration combines three monotone moves, each accepted only on a
/// strict objective increase: the projected-gradient step with step halving
/// (trial step grown from the last accepted step), an equality-constrained
/// Newton step on the current support once it is small enough, and a
/// vertex-exchange step that shifts mass from the worst active atom to the
/// best atom with an exact line search. Projected-gradient steps prune the
/// support early; the Newton refinement then converges quadratically on the
/// active face. Termination is certified by the duality gap
/// max_j u_j - <u, p> <= GAP_TOL, which bounds the remaining suboptimality
/// of the concave objective over the simplex.
fn pgd_core(
    kernel: &GaussKernel,
    scale: &[f64],
    base: &[f64],
    logw: &[f64],
    init: Option<&[f64]>,
) -> PgdOutcome {
    let (n, m) = (kernel.n(), kernel.m());
    let mut p = match init {
        Some(p0) => simplex_project(p0),
        None => vec![1.0 / m as f64; m],
    };

    let mut mix = vec![0.0; n];
    let mut terms = vec![0.0; n];
    let objective = |p: &[f64], mix: &mut [f64], terms: &mut [f64]| -> f64 {
        kernel.mix(p, mix);
        for i in 0..n {
            let den = (scale[i] * mix[i] + base[i]).max(DENSITY_FLOOR);
            terms[i] = logw[i] * den.ln();
        }
        pairwise_sum(terms) / n as f64
    };

    let mut obj = objective(&p, &mut mix, &mut terms);
    let mut trace = vec![obj];
    let mut accepted = 0usize;
    let mut converged = false;
    // trial step grows from the last accepted step so badly scaled
    // objectives do not crawl; halving restores monotonicity
    let mut trial = 1.0f64;

    let mut gradient = vec![0.0; m];
    let mut cand = vec![0.0; m];
    let mut cand_mix = vec![0.0; n];
    let mut cand_terms = vec![0.0; n];
    let mut final_gap = f64::INFINITY;
    while accepted < MAX_ACCEPTED_STEPS {
        // gradient u = K' r / n with r_i = logw_i * scale_i / den_i
        gradient.iter_mut().for_each(|d| *d = 0.0);
        for i in 0..n {
            let den = (scale[i] * mix[i] + base[i]).max(DENSITY_FLOOR);
            let r = logw[i] * (scale[i] / den).min(1e100);
            if r == 0.0 {
                continue;
            }
            let row = kernel.row(i);
            for j in 0..m {
                gradient[j] += r * row[j];
            }
        }
        let inv_n = 1.0 / n as f64;
        for j in 0..m {
            gradient[j] *= inv_n;
        }

        // duality-gap certificate
        let g_dot_p = crate::linalg::dot(&gradient, &p);
        let (mut best_j, mut best_g) = (0usize, f64::NEG_INFINITY);
        for (j, &g) in gradient.iter().enumerate() {
            if g > best_g {
                best_g = g;
                best_j = j;
            }
        }
        final_gap = best_g - g_dot_p;
        if final_gap <= GAP_TOL * (1.0 + obj.abs()) {
            converged = true;
            break;
        }

        let mut improved = false;

        // Newton refinement on the active face once the support is small
        let mut support: Vec<usize> = (0..m).filter(|&j| p[j] > 0.0).collect();
        if !support.contains(&best_j) {
            support.push(best_j);
        }
        if support.len() <= NEWTON_MAX {
            if let Some((cand_p, cand_obj)) = newton_candidate(
                kernel, scale, base, logw, &p, &mix, &support, obj, &mut cand_mix, &mut cand_terms,
            ) {
                if cand_obj > obj {
                    p = cand_p;
                    obj = objective(&p, &mut mix, &mut terms);
                    trace.push(obj);
                    accepted += 1;
                    improved = true;
                }
            }
        }

        // projected-gradient step with step halving; the step is capped so
        // the candidate stays at a numerically sane magnitude even when
        // floor-clamped densities inflate the gradient
        if !improved {
            let grad_inf = gradient.iter().fold(0.0f64, |a, &g| a.max(g.abs()));
            let mut step = trial.min(1e3 / grad_inf.max(1e-12));
            for _ in 0..MAX_HALVINGS {
                for j in 0..m {
                    cand[j] = p[j] + step * gradient[j];
                }
                let proj = simplex_project(&cand);
                let cand_obj = objective(&proj, &mut cand_mix, &mut cand_terms);
                if cand_obj > obj {
                    assert!(cand_obj >= obj, "accepted step must not decrease the objective");
                    p = proj;
                    mix.copy_from_slice(&cand_mix);
                    obj = cand_obj;
                    trace.push(obj);
                    accepted += 1;
                    improved = true;
                    trial = (step * 2.0).min(1e8);
                    break;
                }
                step *= 0.5;
            }
        }

        // vertex exchange: shift mass from the worst active atom to the
        // best atom along an exact line search (O(n) per evaluation)
        if !improved {
            let mut away_j = usize::MAX;
            let mut away_g = f64::INFINITY;
            for (j, &pj) in p.iter().enumerate() {
                if pj > 0.0 && gradient[j] < away_g {
                    away_g = gradient[j];
                    away_j = j;
                }
            }
            if away_j != usize::MAX && away_j != best_j && p[away_j] > 0.0 {
                let slice_obj = |gamma: f64| -> f64 {
                    let mut s = 0.0;
                    for i in 0..n {
                        let row = kernel.row(i);
                        let mixed = mix[i] + gamma * (row[best_j] - row[away_j]);
                        let den = (scale[i] * mixed + base[i]).max(DENSITY_FLOOR);
                        s += logw[i] * den.ln();
                    }
                    s / n as f64
                };
                let mut gamma = golden_max(&slice_obj, 0.0, p[away_j]);
                if gamma > p[away_j] * (1.0 - 1e-12) {
                    gamma = p[away_j];
                }
                if gamma > 0.0 {
                    cand.copy_from_slice(&p);
                    cand[best_j] += gamma;
                    cand[away_j] = (cand[away_j] - gamma).max(0.0);
                    let cand_obj = objective(&cand, &mut cand_mix, &mut cand_terms);
                    if cand_obj > obj {
                        p.copy_from_slice(&cand);
                        mix.copy_from_slice(&cand_mix);
                        obj = cand_obj;
                        trace.push(obj);
                        accepted += 1;
                        improved = true;
                    }
                }
            }
        }

        if !improved {
            // no move of any kind improves: float-precision stationarity
            break;
        }
    }

    if !converged {
        converged = final_gap <= 1e-6 * (1.0 + obj.abs());
    }
    PgdOutcome { weights: p, objective: obj, trace, accepted_steps: accepted, converged }
}

/// Equality-constrained Newton step on a support set, with a feasibility cap
/// and halving line search; returns an improving candidate when one exists.
#[allow(clippy::too_many_arguments)]
fn newton_candidate(
    kernel: &GaussKernel,
    scale: &[f64],
    base: &[f64],
    logw: &[f64],
    p: &[f64],
    mix: &[f64],
    support: &[usize],
    obj: f64,
    cand_mix: &mut [f64],
    cand_terms: &mut [f64],
) -> Option<(Vec<f64>, f64)> {
    let n = kernel.n();
    let k = support.len();
    let mut grad_s = vec![0.0; k];
    let mut kkt = crate::linalg::Mat::zeros(k + 1, k + 1);
    for i in 0..n {
        let den = (scale[i] * mix[i] + base[i]).max(DENSITY_FLOOR);
        // scale/den can overflow its square for observations with weight-
        // dominated floors; the cap only affects points where the quadratic
        // model is meaningless anyway
        let ratio = (scale[i] / den).min(1e100);
        let r = logw[i] * ratio;
        let rr = logw[i] * ratio * ratio;
        if r == 0.0 && rr == 0.0 {
            continue;
        }
        let row = kernel.row(i);
        for (a, &ja) in support.iter().enumerate() {
            grad_s[a] += r * row[ja];
            for (b, &jb) in support.iter().enumerate().skip(a) {
                kkt.add_assign(a, b, -rr * row[ja] * row[jb]);
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    for a in 0..k {
        grad_s[a] *= inv_n;
        for b in a..k {
            let v = kkt.get(a, b) * inv_n;
            kkt.set(a, b, v);
            kkt.set(b, a, v);
        }
        kkt.set(a, k, 1.0);
        kkt.set(k, a, 1.0);
    }
    let mut rhs: Vec<f64> = grad_s.iter().map(|g| -g).collect();
    rhs.push(0.0);
    let dir = crate::linalg::solve(&kkt, &rhs).ok()?;

    // cap the step at the feasibility boundary
    let mut t_max = f64::INFINITY;
    for (a, &ja) in support.iter().enumerate() {
        if dir[a] < 0.0 {
            t_max = t_max.min(-p[ja] / dir[a]);
        }
    }
    let mut t = t_max.min(1.0);
    if !(t > 0.0) {
        return None;
    }
    // the direction sums to zero and stays feasible below t_max, so the
    // slice is affine in t: one O(n k) pass, then O(n) per trial step
    for slot in cand_mix.iter_mut() {
        *slot = 0.0;
    }
    for (a, &ja) in support.iter().enumerate() {
        let d = dir[a];
        if d == 0.0 {
            continue;
        }
        kernel.add_col(ja, d, cand_mix);
    }
    let slice_obj = |t: f64, ct: &mut [f64]| -> f64 {
        for i in 0..n {
            let den = (scale[i] * (mix[i] + t * cand_mix[i]) + base[i]).max(DENSITY_FLOOR);
            ct[i] = logw[i] * den.ln();
        }
        pairwise_sum(ct) / n as f64
    };
    for _ in 0..40 {
        let cand_obj = slice_obj(t, cand_terms);
        if cand_obj > obj {
            let mut cand = p.to_vec();
            for (a, &ja) in support.iter().enumerate() {
                cand[ja] = (p[ja] + t * dir[a]).max(0.0);
            }
            let total: f64 = cand.iter().sum();
            if total > 0.0 {
                for v in cand.iter_mut() {
                    *v /= total;
                }
            }
            return Some((cand, cand_obj));
        }
        t *= 0.5;
    }
    None
}

/// Golden-section search for the maximum of a 1-d concave function.
fn golden_max(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..64 {
        if b - a <= 1e-12 * (1.0 + b.abs()) {
            break;
        }
        let x1 = b - inv_phi * (b - a);
        let x2 = a + inv_phi * (b - a);
        if f(x1) < f(x2) {
            a = x1;
        } else {
            b = x2;
        }
    }
    0.5 * (a + b)
}

/// Weighted grid NPMLE: maximize (1/n) sum w_i log sum_j p_j phi(Y_i - a_j)
/// over the simplex. `init` warm-starts the weights (uniform otherwise).
pub fn kwmle_weighted_from(
    kernel: &GaussKernel,
    w: &[f64],
    init: Option<&[f64]>,
) -> Result<PgdOutcome> {
    assert_eq!(w.len(), kernel.n());
    if w.iter().sum::<f64>() <= 0.0 {
        return Err(Error::WeightsAllZero);
    }
    let base = vec![0.0; kernel.n()];
    Ok(pgd_core(kernel, w, &base, w, init))
}

/// Convenience wrapper building the kernel and returning the fitted mixing
/// measure.
pub fn kwmle_weighted(w: &[f64], y: &[f64], atoms: &[f64]) -> Result<MixingMeasure> {
    if atoms.windows(2).any(|p| !(p[0] < p[1])) {
        return Err(Error::BadInput("atoms must be strictly increasing".into()));
    }
    let kernel = GaussKernel::new(y, atoms);
    let out = kwmle_weighted_from(&kernel, w, None)?;
    MixingMeasure::from_grid(atoms, &out.weights)
}

/// Grid-mixture fit under per-observation mixing proportions: maximize
/// (1/n) sum log(alpha_i * (K p)_i + (1 - alpha_i) f0_i).
pub fn mixture_weights_pgd(
    kernel: &GaussKernel,
    alpha: &[f64],
    f0_vals: &[f64],
    init: Option<&[f64]>,
) -> Result<PgdOutcome> {
    let n = kernel.n();
    assert_eq!(alpha.len(), n);
    assert_eq!(f0_vals.len(), n);
    if alpha.iter().sum::<f64>() <= 0.0 {
        return Err(Error::WeightsAllZero);
    }
    let base: Vec<f64> = alpha.iter().zip(f0_vals).map(|(&a, &f)| (1.0 - a) * f).collect();
    let logw = vec![1.0; n];
    Ok(pgd_core(kernel, alpha, &base, &logw, init))
}

/// Renormalize simplex weights so they sum to one exactly within 1e-10
/// (projection can leave a few ulps of drift).
pub fn normalize_exact_weights(mut w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    if s > 0.0 && (s - 1.0).abs() > 1e-14 {
        for v in &mut w {
            *v /= s;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_atom_gets_full_weight() {
        let m = kwmle_weighted(&[1.0, 0.7, 0.2], &[0.1, -0.4, 0.8], &[0.0]).unwrap();
        assert_eq!(m.weights, vec![1.0]);
    }

    #[test]
    fn all_zero_weights_error() {
        assert!(matches!(
            kwmle_weighted(&[0.0, 0.0], &[0.1, 0.2], &[0.0, 1.0]),
            Err(Error::WeightsAllZero)
        ));
    }

    /// 1-d golden-section oracle over p1 for a two-atom instance.
    fn golden_oracle(y: &[f64], w: &[f64], atoms: [f64; 2], alpha: Option<f64>) -> f64 {
        let n = y.len() as f64;
        let obj = |p1: f64| -> f64 {
            y.iter()
                .zip(w)
                .map(|(&yi, &wi)| {
                    let mix = p1 * phi(yi - atoms[0]) + (1.0 - p1) * phi(yi - atoms[1]);
                    match alpha {
                        None => wi * mix.max(DENSITY_FLOOR).ln(),
                        Some(a) => (a * mix + (1.0 - a) * phi(yi)).max(DENSITY_FLOOR).ln(),
                    }
                })
                .sum::<f64>()
                / n
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        while hi - lo > 1e-9 {
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

    #[test]
    fn two_atom_instance_matches_golden_section() {
        let y = [-1.2, 1.0, 0.9];
        let w = [1.0, 1.0, 1.0];
        let atoms = [-1.0, 1.0];
        let m = kwmle_weighted(&w, &y, &atoms).unwrap();
        let p1_star = golden_oracle(&y, &w, atoms, None);
        assert!(
            (m.weights[0] - p1_star).abs() < 1e-6,
            "pgd {} vs oracle {}",
            m.weights[0],
            p1_star
        );
    }

    #[test]
    fn marginal_mixture_two_atom_matches_golden_section() {
        let y = [-1.1, 0.4, 1.3];
        let atoms = [-1.0, 1.0];
        let kernel = GaussKernel::new(&y, &atoms);
        let f0: Vec<f64> = y.iter().map(|&v| phi(v)).collect();
        let alpha = vec![0.5; 3];
        let out = mixture_weights_pgd(&kernel, &alpha, &f0, None).unwrap();
        let p1_star = golden_oracle(&y, &[1.0; 3], atoms, Some(0.5));
        assert!(
            (out.weights[0] - p1_star).abs() < 1e-6,
            "pgd {} vs oracle {}",
            out.weights[0],
            p1_star
        );
    }

    #[test]
    fn marginal_mixture_alpha_one_reduces_to_plain_kwmle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y: Vec<f64> = (0..40).map(|_| rng.random_range(-3.0..3.0)).collect();
        let atoms: Vec<f64> = (0..7).map(|j| -3.0 + j as f64).collect();
        let kernel = GaussKernel::new(&y, &atoms);
        let f0: Vec<f64> = y.iter().map(|&v| phi(v)).collect();
        let ones = vec![1.0; y.len()];
        let a = mixture_weights_pgd(&kernel, &ones, &f0, None).unwrap();
        let b = kwmle_weighted_from(&kernel, &ones, None).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-9);
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn trace_is_nondecreasing_and_restarts_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let y: Vec<f64> = (0..120).map(|_| rng.random_range(-4.0..4.0)).collect();
        let w: Vec<f64> = (0..120).map(|_| rng.random_range(0.05..1.0)).collect();
        let atoms: Vec<f64> = (0..21).map(|j| -4.0 + 0.4 * j as f64).collect();
        let kernel = GaussKernel::new(&y, &atoms);
        let base = kwmle_weighted_from(&kernel, &w, None).unwrap();
        assert!(base.trace.windows(2).all(|t| t[1] >= t[0] - 1e-9));
        // flatness check: random simplex restarts land on the same objective
        for seed in 0..5u64 {
            let mut r = ChaCha8Rng::seed_from_u64(100 + seed);
            let raw: Vec<f64> = (0..atoms.len()).map(|_| r.random_range(0.0..1.0)).collect();
            let init = simplex_project(&raw);
            let alt = kwmle_weighted_from(&kernel, &w, Some(&init)).unwrap();
            assert!(
                (alt.objective - base.objective).abs() < 1e-7,
                "restart objective {} vs {}",
                alt.objective,
                base.objective
            );
        }
    }
}
