//! Simulation laboratory: reproducible data generation for the benchmark
//! settings, estimation and testing metrics, the likelihood-path scan and
//! the with/without-covariates comparison.

mod compare;
mod harness;
mod path;

pub use compare::{compare_f1_with_without_covariates, hellinger_distance_to_truth};
pub use harness::{design_for_fitting, fit_method, run_setting, Method, SimRow};
pub use path::{default_path_grid, likelihood_path, LikelihoodPath};

use crate::error::{Error, Result};
use crate::inference::mix_seed;
use crate::linalg::Mat;
use crate::model::{lfdr_from_parts, phi, Clamping, Dataset, LinkKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Prior surface selector: the four benchmark shapes on the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SKind {
    A,
    B,
    C,
    D,
}

impl SKind {
    /// The log-odds surface s(x1, x2).
    pub fn s(&self, x1: f64, x2: f64) -> f64 {
        match self {
            SKind::A => -2.0 + 3.5 * x1 * x1 - 3.5 * x2 * x2,
            SKind::B => -3.0 + 1.5 * x1 + 1.5 * x2,
            SKind::C => -1.0 + 9.0 * (x1 - 0.5) * (x1 - 0.5) - 5.0 * x2.abs(),
            SKind::D => 20.0 * (x1 - 0.75),
        }
    }

    pub fn pi(&self, x1: f64, x2: f64) -> f64 {
        LinkKind::Logistic.eval(self.s(x1, x2))
    }

    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "A" | "a" => Ok(SKind::A),
            "B" | "b" => Ok(SKind::B),
            "C" | "c" => Ok(SKind::C),
            "D" | "d" => Ok(SKind::D),
            other => Err(Error::BadInput(format!("unknown prior setting {other:?}"))),
        }
    }
}

/// Signal density selector: the four benchmark normal mixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum F1Kind {
    I,
    II,
    III,
    IV,
}

impl F1Kind {
    pub fn density(&self) -> TrueSignal {
        match self {
            F1Kind::I => TrueSignal::new(
                vec![0.4, 0.2, 0.4],
                vec![-1.25, 0.0, 1.25],
                vec![3.0, 5.0, 3.0],
            ),
            F1Kind::II => TrueSignal::new(
                vec![0.3, 0.4, 0.3],
                vec![0.0, 0.0, 0.0],
                vec![1.1, 2.0, 10.0],
            ),
            F1Kind::III => TrueSignal::new(
                vec![0.5, 1.0 / 3.0, 1.0 / 6.0],
                vec![0.5, 1.0, 1.5],
                vec![1.0, 1.1, 2.0],
            ),
            F1Kind::IV => TrueSignal::new(
                vec![0.48, 0.04, 0.48],
                vec![-2.0, 0.0, 2.0],
                vec![2.0, 17.0, 2.0],
            ),
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "i" | "I" | "1" => Ok(F1Kind::I),
            "ii" | "II" | "2" => Ok(F1Kind::II),
            "iii" | "III" | "3" => Ok(F1Kind::III),
            "iv" | "IV" | "4" => Ok(F1Kind::IV),
            other => Err(Error::BadInput(format!("unknown signal setting {other:?}"))),
        }
    }
}

/// A general normal mixture used as the data-generating signal density.
/// Component variances must be at least 1 for membership in the unit-variance
/// location-mixture class, but evaluation and sampling do not require it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueSignal {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub vars: Vec<f64>,
}

impl TrueSignal {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, vars: Vec<f64>) -> Self {
        assert_eq!(weights.len(), means.len());
        assert_eq!(weights.len(), vars.len());
        let s: f64 = weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-9, "mixture weights must sum to 1");
        TrueSignal { weights, means, vars }
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.vars)
            .map(|((&w, &m), &v)| {
                let sd = v.sqrt();
                w * phi((y - m) / sd) / sd
            })
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(&self.means).map(|(w, m)| w * m).sum()
    }

    pub fn effective_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (m, v) in self.means.iter().zip(&self.vars) {
            let r = 6.0 * v.sqrt();
            lo = lo.min(m - r);
            hi = hi.max(m + r);
        }
        (lo, hi)
    }

    /// Inverse-CDF component selection followed by a Gaussian draw.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.random_range(0.0..1.0);
        let mut acc = 0.0;
        let mut idx = self.weights.len() - 1;
        for (j, &w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                idx = j;
                break;
            }
        }
        let z: f64 = StandardNormal.sample(rng);
        self.means[idx] + self.vars[idx].sqrt() * z
    }
}

/// One benchmark configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSetting {
    pub s_id: SKind,
    pub f1_id: F1Kind,
    pub n: usize,
    pub seed: u64,
    /// Expand the two covariates into six cubic spline columns before
    /// fitting (the raw covariates always stay in the replicate).
    pub expand_splines: bool,
}

impl SimSetting {
    pub fn new(s_id: SKind, f1_id: F1Kind, n: usize, seed: u64) -> Self {
        SimSetting { s_id, f1_id, n, seed, expand_splines: true }
    }

    /// Parse a tag like "A.i" or "D.iv".
    pub fn parse_tag(tag: &str, n: usize, seed: u64) -> Result<Self> {
        let (s, f) = tag
            .split_once('.')
            .ok_or_else(|| Error::BadInput(format!("setting tag {tag:?} must look like A.i")))?;
        Ok(SimSetting::new(SKind::parse(s)?, F1Kind::parse(f)?, n, seed))
    }

    /// Seed for replicate r, derived by a fixed 64-bit mixing function.
    pub fn replicate_seed(&self, r: u64) -> u64 {
        mix_seed(self.seed, r)
    }
}

/// One simulated dataset together with its latent truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Replicate {
    pub data: Dataset,
    pub z_true: Vec<u8>,
    pub pi_true: Vec<f64>,
    pub f1_true_at_y: Vec<f64>,
    pub lfdr_true: Vec<f64>,
}

/// Draw one replicate from a benchmark prior surface with an arbitrary
/// normal-mixture signal: covariates uniform on the unit square, latent
/// labels Bernoulli(pi*(X_i)), responses from the signal or the standard
/// normal null. Bitwise reproducible for fixed inputs.
pub fn simulate_custom(s_id: SKind, signal: &TrueSignal, n: usize, seed: u64) -> Replicate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut z_true = Vec::with_capacity(n);
    let mut pi_true = Vec::with_capacity(n);
    for _ in 0..n {
        let x1: f64 = rng.random_range(0.0..1.0);
        let x2: f64 = rng.random_range(0.0..1.0);
        let pi = s_id.pi(x1, x2);
        let z = u8::from(rng.random_range(0.0..1.0) < pi);
        let v = if z == 1 {
            signal.sample(&mut rng)
        } else {
            StandardNormal.sample(&mut rng)
        };
        rows.push(vec![x1, x2]);
        y.push(v);
        z_true.push(z);
        pi_true.push(pi);
    }
    let f1_true_at_y: Vec<f64> = y.iter().map(|&v| signal.pdf(v)).collect();
    let f0_at_y: Vec<f64> = y.iter().map(|&v| phi(v)).collect();
    let lfdr_true =
        lfdr_from_parts(&pi_true, &f1_true_at_y, &f0_at_y, Clamping::Floor).expect("finite truth");
    Replicate {
        data: Dataset::new(y, Mat::from_rows(&rows)).expect("simulated data is valid"),
        z_true,
        pi_true,
        f1_true_at_y,
        lfdr_true,
    }
}

/// Draw one replicate of a benchmark setting.
pub fn simulate(setting: &SimSetting) -> Replicate {
    simulate_custom(setting.s_id, &setting.f1_id.density(), setting.n, setting.seed)
}

/// Overall signal proportion E[pi*(X)] for a prior surface, by tensorized
/// Gauss-Legendre quadrature over the unit square.
pub fn pibar(s_id: SKind) -> f64 {
    let (nodes, weights) = gauss_legendre_64();
    let mut acc = 0.0;
    for (i, &xi) in nodes.iter().enumerate() {
        for (j, &xj) in nodes.iter().enumerate() {
            acc += weights[i] * weights[j] * s_id.pi(xi, xj);
        }
    }
    acc
}

/// 64-point Gauss-Legendre rule mapped to [0, 1], generated by Newton
/// iteration on the Legendre polynomial.
fn gauss_legendre_64() -> (Vec<f64>, Vec<f64>) {
    let n = 64usize;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // initial guess: Chebyshev-like
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            // Legendre recurrence for P_n(z) and P'_n(z)
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j as f64 + 1.0) * z * p1 - j as f64 * p2) / (j as f64 + 1.0);
            }
            let dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p0 / dp;
            if (z - z1).abs() < 1e-15 {
                let w = 2.0 / ((1.0 - z * z) * dp * dp);
                nodes[i] = 0.5 * (1.0 - z);
                nodes[n - 1 - i] = 0.5 * (1.0 + z);
                weights[i] = 0.5 * w;
                weights[n - 1 - i] = 0.5 * w;
                break;
            }
        }
    }
    (nodes, weights)
}

/// Per-replicate estimation metrics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EstimationMetrics {
    /// Root mean squared error of the fitted prior over the sample points.
    pub rmse_pi: f64,
    /// Root mean squared error of the fitted signal density at the responses.
    pub rmse_f1: f64,
    /// Root mean squared error of the fitted lFDRs.
    pub rmse_lfdr: f64,
    /// Mean positive part of (true lFDR - fitted lFDR).
    pub underest_lfdr: f64,
}

/// Sample versions of the estimation metrics against the replicate truth.
pub fn metrics(fit: &crate::model::MixtureFit, rep: &Replicate) -> EstimationMetrics {
    let n = rep.data.n();
    assert_eq!(fit.lfdr.len(), n, "fit and replicate disagree on n");
    let mut se_pi = 0.0;
    let mut se_f1 = 0.0;
    let mut se_l = 0.0;
    let mut under = 0.0;
    for i in 0..n {
        se_pi += (fit.pi_values[i] - rep.pi_true[i]).powi(2);
        se_f1 += (fit.f1_values[i] - rep.f1_true_at_y[i]).powi(2);
        se_l += (fit.lfdr[i] - rep.lfdr_true[i]).powi(2);
        under += (rep.lfdr_true[i] - fit.lfdr[i]).max(0.0);
    }
    let nf = n as f64;
    EstimationMetrics {
        rmse_pi: (se_pi / nf).sqrt(),
        rmse_f1: (se_f1 / nf).sqrt(),
        rmse_lfdr: (se_l / nf).sqrt(),
        underest_lfdr: under / nf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MixtureFit, NullDensity, PriorFn, SignalDensity};

    #[test]
    fn simulate_is_bitwise_reproducible() {
        let setting = SimSetting::new(SKind::A, F1Kind::I, 500, 42);
        let a = simulate(&setting);
        let b = simulate(&setting);
        assert_eq!(
            a.data.y().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.data.y().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(a.z_true, b.z_true);
        assert_eq!(
            a.lfdr_true.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.lfdr_true.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn pi_true_is_in_range_and_d_is_steep() {
        let setting = SimSetting::new(SKind::D, F1Kind::II, 400, 7);
        let rep = simulate(&setting);
        assert!(rep.pi_true.iter().all(|p| (0.0..=1.0).contains(p)));
        // at x1 = 1 the log-odds are 5, so pi exceeds 0.99
        assert!(SKind::D.pi(1.0, 0.3) > 0.99);
        assert!((SKind::D.pi(1.0, 0.3) - 0.9933071491).abs() < 1e-9);
    }

    #[test]
    fn lfdr_truth_is_recomputable() {
        let setting = SimSetting::new(SKind::B, F1Kind::III, 300, 9);
        let rep = simulate(&setting);
        let f0: Vec<f64> = rep.data.y().iter().map(|&v| phi(v)).collect();
        let again =
            lfdr_from_parts(&rep.pi_true, &rep.f1_true_at_y, &f0, Clamping::Floor).unwrap();
        for (a, b) in rep.lfdr_true.iter().zip(&again) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn empirical_label_rate_matches_quadrature_pibar() {
        let setting = SimSetting::new(SKind::B, F1Kind::I, 100_000, 11);
        let rep = simulate(&setting);
        let rate = rep.z_true.iter().map(|&z| z as f64).sum::<f64>() / rep.z_true.len() as f64;
        let expected = pibar(SKind::B);
        // Monte Carlo oracle: 3 sigma of a Bernoulli mean at n = 1e5
        let sigma = (expected * (1.0 - expected) / 100_000.0).sqrt();
        assert!(
            (rate - expected).abs() < 3.0 * sigma,
            "rate {rate} vs pibar {expected} (3sig {})",
            3.0 * sigma
        );
    }

    #[test]
    fn quadrature_pibar_matches_plain_average_on_linear_setting() {
        // sanity for the Gauss-Legendre rule: compare against a dense grid
        let mut acc = 0.0;
        let k = 400;
        for i in 0..k {
            for j in 0..k {
                let x1 = (i as f64 + 0.5) / k as f64;
                let x2 = (j as f64 + 0.5) / k as f64;
                acc += SKind::B.pi(x1, x2);
            }
        }
        let grid = acc / (k * k) as f64;
        assert!((pibar(SKind::B) - grid).abs() < 1e-6);
    }

    #[test]
    fn metrics_vanish_at_the_truth_and_clip_underestimation() {
        // a fit whose per-observation values equal the truth exactly
        let setting = SimSetting::new(SKind::A, F1Kind::I, 200, 13);
        let rep = simulate(&setting);
        let placeholder_prior = PriorFn::constant(0.5).unwrap();
        let placeholder_signal = SignalDensity::ParamNormal { mu: 0.0, sigma2: 1.0 };
        let mut fit = MixtureFit::from_parts(
            placeholder_prior,
            placeholder_signal,
            NullDensity::StdNormal,
            &rep.data,
            0,
            true,
        )
        .unwrap();
        fit.pi_values = rep.pi_true.clone();
        fit.f1_values = rep.f1_true_at_y.clone();
        fit.lfdr = rep.lfdr_true.clone();
        let m = metrics(&fit, &rep);
        assert_eq!(m.rmse_pi, 0.0);
        assert_eq!(m.rmse_f1, 0.0);
        assert_eq!(m.rmse_lfdr, 0.0);
        assert_eq!(m.underest_lfdr, 0.0);

        // overestimating lFDRs has zero positive part
        fit.lfdr = rep.lfdr_true.iter().map(|l| (l + 0.1).min(1.0)).collect();
        let m = metrics(&fit, &rep);
        assert_eq!(m.underest_lfdr, 0.0);
        assert!(m.rmse_lfdr > 0.0);
    }

    #[test]
    fn hand_built_three_point_metrics() {
        let setting = SimSetting::new(SKind::A, F1Kind::I, 3, 21);
        let rep = simulate(&setting);
        let mut fit = MixtureFit::from_parts(
            PriorFn::constant(0.5).unwrap(),
            SignalDensity::ParamNormal { mu: 0.0, sigma2: 1.0 },
            NullDensity::StdNormal,
            &rep.data,
            0,
            true,
        )
        .unwrap();
        fit.pi_values = vec![rep.pi_true[0] + 0.1, rep.pi_true[1], rep.pi_true[2] - 0.2];
        fit.f1_values = rep.f1_true_at_y.clone();
        fit.lfdr = vec![
            rep.lfdr_true[0] - 0.05,
            rep.lfdr_true[1] + 0.5_f64.min(1.0 - rep.lfdr_true[1]),
            rep.lfdr_true[2],
        ];
        let m = metrics(&fit, &rep);
        let expected_rmse_pi = ((0.01 + 0.0 + 0.04) / 3.0_f64).sqrt();
        assert!((m.rmse_pi - expected_rmse_pi).abs() < 1e-12);
        assert_eq!(m.rmse_f1, 0.0);
        assert!((m.underest_lfdr - 0.05 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn true_signal_matches_location_mixture_representation() {
        // each N(m, v) with v >= 1 equals the unit-variance location mixture
        // with mixing N(m, v-1); spot-check the density at a few points for
        // setting (iv) against directly mixing many atoms
        let sig = F1Kind::IV.density();
        let spread: Vec<f64> = (-1200..=1200).map(|k| k as f64 * 0.02).collect();
        for &y in &[-3.0, -1.0, 0.0, 0.5, 2.5] {
            let direct = sig.pdf(y);
            let mut approx = 0.0;
            for ((w, m), v) in sig.weights.iter().zip(&sig.means).zip(&sig.vars) {
                let mix_sd = (v - 1.0).sqrt();
                if mix_sd < 1e-9 {
                    approx += w * phi(y - m);
                    continue;
                }
                let mut comp = 0.0;
                let mut mass = 0.0;
                for &t in &spread {
                    let g = phi((t - m) / mix_sd) / mix_sd * 0.02;
                    comp += g * phi(y - t);
                    mass += g;
                }
                approx += w * comp / mass;
            }
            assert!((direct - approx).abs() < 1e-4, "y={y}: {direct} vs {approx}");
        }
    }
}
