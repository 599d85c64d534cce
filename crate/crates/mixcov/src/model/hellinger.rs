//! Hellinger distances between conditional mixture densities.

use super::{mixture_density, Dataset, NullDensity, PriorFn, SignalDensity};

/// Squared Hellinger distance between two densities given as closures, by
/// composite trapezoid quadrature on [lo, hi] with `points` nodes.
pub fn hellinger_sq_quad(
    f: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    points: usize,
) -> f64 {
    assert!(points >= 3 && hi > lo);
    let h = (hi - lo) / (points - 1) as f64;
    let mut acc = 0.0;
    for k in 0..points {
        let y = lo + h * k as f64;
        let v = (f(y).max(0.0).sqrt() - g(y).max(0.0).sqrt()).powi(2);
        acc += if k == 0 || k == points - 1 { 0.5 * v } else { v };
    }
    (acc * h).clamp(0.0, 2.0)
}

/// Squared Hellinger distance with the integration range chosen from the
/// two densities' effective supports, extended by 6 on each side.
pub fn hellinger_sq_fn(
    f: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    range_f: (f64, f64),
    range_g: (f64, f64),
) -> f64 {
    let lo = range_f.0.min(range_g.0) - 6.0;
    let hi = range_f.1.max(range_g.1) + 6.0;
    hellinger_sq_quad(f, g, lo, hi, 2001)
}

/// Average over the sample covariates of the squared Hellinger distance
/// between the conditional densities of Y | X_i induced by two
/// (prior, signal) pairs. Lies in [0, 2] and is symmetric.
pub fn avg_hellinger_sq(
    fit_a: (&PriorFn, &SignalDensity),
    fit_b: (&PriorFn, &SignalDensity),
    f0: &NullDensity,
    data: &Dataset,
) -> f64 {
    let n = data.n();
    let exact_steps = fit_a.1.is_step() && fit_b.1.is_step() && *f0 == NullDensity::UniformUnit;

    let (lo, hi) = if exact_steps {
        (0.0, 1.0)
    } else {
        let ra = fit_a.1.effective_range();
        let rb = fit_b.1.effective_range();
        let r0 = f0.effective_range();
        (
            ra.0.min(rb.0).min(r0.0) - 6.0,
            ra.1.max(rb.1).max(r0.1) + 6.0,
        )
    };

    let mut total = 0.0;
    for i in 0..n {
        let pa = fit_a.0.eval(data.x_row(i));
        let pb = fit_b.0.eval(data.x_row(i));
        let da = |y: f64| mixture_density(pa, fit_a.1.pdf(y), f0.pdf(y));
        let db = |y: f64| mixture_density(pb, fit_b.1.pdf(y), f0.pdf(y));
        let h2 = if exact_steps {
            hellinger_sq_steps(&da, &db, fit_a.1, fit_b.1)
        } else {
            hellinger_sq_quad(da, db, lo, hi, 2001)
        };
        total += h2;
    }
    (total / n as f64).clamp(0.0, 2.0)
}

/// Exact piecewise integration when both conditional densities are step
/// functions on (0, 1].
fn hellinger_sq_steps(
    da: &impl Fn(f64) -> f64,
    db: &impl Fn(f64) -> f64,
    sa: &SignalDensity,
    sb: &SignalDensity,
) -> f64 {
    let mut edges: Vec<f64> = vec![0.0, 1.0];
    for s in [sa, sb] {
        if let SignalDensity::Decreasing { breakpoints, .. } = s {
            edges.extend_from_slice(breakpoints);
        }
    }
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let mut acc = 0.0;
    for w in edges.windows(2) {
        let (l, r) = (w[0], w[1]);
        if r <= l {
            continue;
        }
        let mid = 0.5 * (l + r);
        acc += (da(mid).sqrt() - db(mid).sqrt()).powi(2) * (r - l);
    }
    acc.clamp(0.0, 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MixingMeasure;

    fn gm(atoms: Vec<f64>, weights: Vec<f64>) -> SignalDensity {
        SignalDensity::GaussMix(MixingMeasure::new(atoms, weights).unwrap())
    }

    #[test]
    fn identical_fits_have_zero_distance() {
        let data = Dataset::from_responses(vec![0.1, -0.4, 1.2]).unwrap();
        let p = PriorFn::constant(0.4).unwrap();
        let s = gm(vec![-1.0, 2.0], vec![0.3, 0.7]);
        let d = avg_hellinger_sq((&p, &s), (&p, &s), &NullDensity::StdNormal, &data);
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn shifted_normal_matches_closed_form() {
        // h^2(N(mu1,1), N(mu2,1)) = 2(1 - exp(-(mu1-mu2)^2/8))
        let data = Dataset::from_responses(vec![0.0]).unwrap();
        let one = PriorFn::constant(1.0).unwrap();
        let a = gm(vec![2.0], vec![1.0]);
        let b = gm(vec![0.0], vec![1.0]);
        let d = avg_hellinger_sq((&one, &a), (&one, &b), &NullDensity::StdNormal, &data);
        let expected = 2.0 * (1.0 - (-0.5f64).exp());
        assert!((d - expected).abs() < 1e-6, "got {d}, want {expected}");
        assert!((expected - 0.7869387).abs() < 1e-7);
    }

    #[test]
    fn symmetric_and_bounded() {
        let data = Dataset::from_responses(vec![0.5, -1.0]).unwrap();
        let pa = PriorFn::constant(0.9).unwrap();
        let pb = PriorFn::constant(0.2).unwrap();
        let sa = gm(vec![-4.0, 4.0], vec![0.5, 0.5]);
        let sb = gm(vec![0.0], vec![1.0]);
        let f0 = NullDensity::StdNormal;
        let ab = avg_hellinger_sq((&pa, &sa), (&pb, &sb), &f0, &data);
        let ba = avg_hellinger_sq((&pb, &sb), (&pa, &sa), &f0, &data);
        assert_eq!(ab, ba);
        assert!((0.0..=2.0).contains(&ab));
    }

    #[test]
    fn step_densities_integrate_exactly() {
        let data = Dataset::from_responses(vec![0.5]).unwrap();
        let one = PriorFn::constant(1.0).unwrap();
        let a = SignalDensity::Decreasing { breakpoints: vec![0.5, 1.0], levels: vec![1.6, 0.4] };
        let b = SignalDensity::Decreasing { breakpoints: vec![1.0], levels: vec![1.0] };
        let d = avg_hellinger_sq((&one, &a), (&one, &b), &NullDensity::UniformUnit, &data);
        let expected = (1.6f64.sqrt() - 1.0).powi(2) * 0.5 + (0.4f64.sqrt() - 1.0).powi(2) * 0.5;
        assert!((d - expected).abs() < 1e-12);
    }
}
