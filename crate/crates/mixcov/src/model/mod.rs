//! Domain types for the covariate-dependent two-groups mixture
//! `Y | X = x ~ pi(x) f1 + (1 - pi(x)) f0`, plus density evaluation, the
//! joint log-likelihood, lFDRs, Hellinger distances and design-matrix
//! construction.

mod hellinger;
mod loglik;
mod shift;
mod spline;

pub use hellinger::{avg_hellinger_sq, hellinger_sq_fn, hellinger_sq_quad};
pub use loglik::{
    amle_check, amle_check_parts, lfdr_from_parts, lfdr_vector, loglik_from_parts, loglik_joint,
    mixture_density, AmleReport, Clamping, LoglikValue, DENSITY_FLOOR,
};
pub use shift::c_shift;
pub use spline::{spline_apply, spline_expand, SplineMeta};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use serde::{Deserialize, Serialize};

pub const INV_SQRT_2PI: f64 = 0.3989422804014327;

/// Standard normal density.
pub fn phi(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal distribution function.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// n responses plus an n x p covariate matrix; p = 0 encodes the
/// covariate-free two-groups model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    y: Vec<f64>,
    x: Mat,
}

impl Dataset {
    pub fn new(y: Vec<f64>, x: Mat) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::BadInput("dataset needs at least one observation".into()));
        }
        if x.rows() != y.len() {
            return Err(Error::BadInput(format!(
                "covariate rows ({}) do not match response length ({})",
                x.rows(),
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadInput("non-finite response value".into()));
        }
        if x.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::BadInput("non-finite covariate value".into()));
        }
        Ok(Dataset { y, x })
    }

    /// Covariate-free dataset (p = 0).
    pub fn from_responses(y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        Dataset::new(y, Mat::zeros(n, 0))
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &Mat {
        &self.x
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        self.x.row(i)
    }

    /// Replace the design matrix (e.g. after a spline expansion).
    pub fn with_design(&self, x: Mat) -> Result<Self> {
        Dataset::new(self.y.clone(), x)
    }
}

/// The completely known null component f0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NullDensity {
    StdNormal,
    Normal { mu: f64, sigma2: f64 },
    UniformUnit,
}

impl NullDensity {
    pub fn validate(&self) -> Result<()> {
        if let NullDensity::Normal { sigma2, .. } = self {
            if !(*sigma2 > 0.0) {
                return Err(Error::BadInput("normal null requires sigma2 > 0".into()));
            }
        }
        Ok(())
    }

    pub fn pdf(&self, y: f64) -> f64 {
        match *self {
            NullDensity::StdNormal => phi(y),
            NullDensity::Normal { mu, sigma2 } => {
                let sd = sigma2.sqrt();
                phi((y - mu) / sd) / sd
            }
            NullDensity::UniformUnit => {
                if (0.0..=1.0).contains(&y) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            NullDensity::StdNormal => 0.0,
            NullDensity::Normal { mu, .. } => mu,
            NullDensity::UniformUnit => 0.5,
        }
    }

    /// Interval outside which the density mass is negligible.
    pub fn effective_range(&self) -> (f64, f64) {
        match *self {
            NullDensity::StdNormal => (0.0, 0.0),
            NullDensity::Normal { mu, sigma2 } => {
                let r = 6.0 * sigma2.sqrt();
                (mu - r, mu + r)
            }
            NullDensity::UniformUnit => (0.0, 1.0),
        }
    }
}

/// Discrete mixing measure G: atoms with simplex weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingMeasure {
    pub atoms: Vec<f64>,
    pub weights: Vec<f64>,
}

impl MixingMeasure {
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let m = MixingMeasure { atoms, weights };
        m.validate()?;
        Ok(m)
    }

    /// Build a measure from solver output on a grid: drops numerically dead
    /// atoms (weight below 1e-14) and renormalizes the rest.
    pub fn from_grid(atoms: &[f64], weights: &[f64]) -> Result<Self> {
        let mut a = Vec::new();
        let mut w = Vec::new();
        for (&atom, &weight) in atoms.iter().zip(weights) {
            if weight > 1e-14 {
                a.push(atom);
                w.push(weight);
            }
        }
        if a.is_empty() {
            return Err(Error::BadInput("all grid weights vanished".into()));
        }
        let total: f64 = w.iter().sum();
        for v in &mut w {
            *v /= total;
        }
        MixingMeasure::new(a, w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() || self.atoms.len() != self.weights.len() {
            return Err(Error::BadInput("mixing measure needs matching nonempty atoms/weights".into()));
        }
        if self.atoms.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::BadInput("atoms must be strictly increasing".into()));
        }
        if self.weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::BadInput("weights must be nonnegative".into()));
        }
        let s: f64 = self.weights.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::BadInput(format!("weights sum to {s}, not 1")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// The unknown signal density f1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalDensity {
    /// Gaussian location mixture with unit component variance.
    GaussMix(MixingMeasure),
    /// Nonincreasing step density on (0, 1]: `levels[k]` on
    /// `(breakpoints[k-1], breakpoints[k]]` with an implicit left edge at 0.
    Decreasing { breakpoints: Vec<f64>, levels: Vec<f64> },
    /// Parametric normal signal.
    ParamNormal { mu: f64, sigma2: f64 },
}

impl SignalDensity {
    pub fn validate(&self) -> Result<()> {
        match self {
            SignalDensity::GaussMix(m) => m.validate(),
            SignalDensity::Decreasing { breakpoints, levels } => {
                if breakpoints.is_empty() || breakpoints.len() != levels.len() {
                    return Err(Error::BadInput("decreasing density needs matching breakpoints/levels".into()));
                }
                if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::BadInput("breakpoints must be strictly increasing".into()));
                }
                if breakpoints[0] <= 0.0 || *breakpoints.last().unwrap() > 1.0 + 1e-12 {
                    return Err(Error::BadInput("breakpoints must lie in (0, 1]".into()));
                }
                if levels.windows(2).any(|w| w[0] < w[1] - 1e-12) {
                    return Err(Error::BadInput("levels must be nonincreasing".into()));
                }
                if levels.iter().any(|&l| l < 0.0) {
                    return Err(Error::BadInput("levels must be nonnegative".into()));
                }
                let mut mass = 0.0;
                let mut prev = 0.0;
                for (b, l) in breakpoints.iter().zip(levels) {
                    mass += l * (b - prev);
                    prev = *b;
                }
                if (mass - 1.0).abs() > 1e-8 {
                    return Err(Error::BadInput(format!("step density integrates to {mass}, not 1")));
                }
                Ok(())
            }
            SignalDensity::ParamNormal { sigma2, .. } => {
                if !(*sigma2 > 0.0) {
                    return Err(Error::BadInput("param normal requires sigma2 > 0".into()));
                }
                Ok(())
            }
        }
    }

    /// Density value at y; finite and nonnegative for valid inputs.
    pub fn pdf(&self, y: f64) -> f64 {
        match self {
            SignalDensity::GaussMix(m) => m
                .atoms
                .iter()
                .zip(&m.weights)
                .map(|(&a, &w)| w * phi(y - a))
                .sum(),
            SignalDensity::Decreasing { breakpoints, levels } => {
                if y <= 0.0 || y > *breakpoints.last().unwrap() {
                    return 0.0;
                }
                // first breakpoint >= y selects the step
                let idx = breakpoints.partition_point(|&b| b < y);
                levels[idx]
            }
            SignalDensity::ParamNormal { mu, sigma2 } => {
                let sd = sigma2.sqrt();
                phi((y - mu) / sd) / sd
            }
        }
    }

    pub fn effective_range(&self) -> (f64, f64) {
        match self {
            SignalDensity::GaussMix(m) => (m.atoms[0], *m.atoms.last().unwrap()),
            SignalDensity::Decreasing { breakpoints, .. } => (0.0, *breakpoints.last().unwrap()),
            SignalDensity::ParamNormal { mu, sigma2 } => {
                let r = 6.0 * sigma2.sqrt();
                (mu - r, mu + r)
            }
        }
    }

    /// True when the density is a step function (exact piecewise integration applies).
    pub fn is_step(&self) -> bool {
        matches!(self, SignalDensity::Decreasing { .. })
    }
}

/// Link function for the parametric prior class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Logistic,
    Probit,
    CLogLog,
}

impl LinkKind {
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            LinkKind::Logistic => 1.0 / (1.0 + (-z).exp()),
            LinkKind::Probit => std_normal_cdf(z),
            LinkKind::CLogLog => -(-z.exp()).exp_m1(),
        }
    }

    /// First derivative g'(z).
    pub fn deriv(&self, z: f64) -> f64 {
        match self {
            LinkKind::Logistic => {
                let g = self.eval(z);
                g * (1.0 - g)
            }
            LinkKind::Probit => phi(z),
            LinkKind::CLogLog => (z - z.exp()).exp(),
        }
    }

    /// Second derivative g''(z).
    pub fn deriv2(&self, z: f64) -> f64 {
        match self {
            LinkKind::Logistic => {
                let g = self.eval(z);
                g * (1.0 - g) * (1.0 - 2.0 * g)
            }
            LinkKind::Probit => -z * phi(z),
            LinkKind::CLogLog => {
                let ez = z.exp();
                (z - ez).exp() * (1.0 - ez)
            }
        }
    }

    /// Inverse link; the argument must lie in (0, 1).
    pub fn inverse(&self, p: f64) -> f64 {
        match self {
            LinkKind::Logistic => (p / (1.0 - p)).ln(),
            LinkKind::Probit => inverse_std_normal_cdf(p),
            LinkKind::CLogLog => (-(1.0 - p).ln()).ln(),
        }
    }

    /// log g(z), numerically stable in the tails.
    pub fn log_eval(&self, z: f64) -> f64 {
        match self {
            LinkKind::Logistic => -softplus(-z),
            LinkKind::Probit => log_std_normal_cdf(z),
            LinkKind::CLogLog => {
                // log(1 - exp(-e^z))
                let t = z.exp();
                if t > 36.0 {
                    0.0
                } else {
                    (-(-t).exp_m1()).ln()
                }
            }
        }
    }

    /// log(1 - g(z)), numerically stable in the tails.
    pub fn log_one_minus(&self, z: f64) -> f64 {
        match self {
            LinkKind::Logistic => -softplus(z),
            LinkKind::Probit => log_std_normal_cdf(-z),
            LinkKind::CLogLog => -z.exp(),
        }
    }
}

fn softplus(z: f64) -> f64 {
    if z > 34.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

/// log Phi(z) with a Mills-ratio expansion for the deep left tail.
pub fn log_std_normal_cdf(z: f64) -> f64 {
    if z > -8.0 {
        std_normal_cdf(z).ln()
    } else {
        let z2 = z * z;
        // Phi(z) ~ phi(z)/(-z) * (1 - 1/z^2 + 3/z^4)
        -0.5 * z2 - 0.5 * (2.0 * std::f64::consts::PI).ln() - (-z).ln()
            + (1.0 - 1.0 / z2 + 3.0 / (z2 * z2)).ln()
    }
}

/// Inverse standard normal CDF (Acklam's rational approximation polished by
/// one Newton step on erfc).
pub fn inverse_std_normal_cdf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "inverse cdf needs p in (0,1)");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p_low = 0.02425;
    let mut x = if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // one Newton polish
    for _ in 0..2 {
        let e = std_normal_cdf(x) - p;
        x -= e / phi(x);
    }
    x
}

/// The prior function pi(.): constant, parametric link, or isotonic over a
/// designated scalar covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorFn {
    Constant { value: f64 },
    Link { link: LinkKind, beta0: f64, beta: Vec<f64> },
    /// Step function over `xs` (ascending training covariate values):
    /// evaluation takes the value at the nearest smaller training point and
    /// extends left with the first value. `covariate` designates the column.
    Isotonic { covariate: usize, xs: Vec<f64>, values: Vec<f64> },
}

impl PriorFn {
    pub fn constant(value: f64) -> Result<Self> {
        let p = PriorFn::Constant { value };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PriorFn::Constant { value } => {
                if !(0.0..=1.0).contains(value) {
                    return Err(Error::BadInput("constant prior must lie in [0,1]".into()));
                }
            }
            PriorFn::Link { beta0, beta, .. } => {
                if !beta0.is_finite() || beta.iter().any(|b| !b.is_finite()) {
                    return Err(Error::BadInput("link coefficients must be finite".into()));
                }
            }
            PriorFn::Isotonic { xs, values, .. } => {
                if xs.is_empty() || xs.len() != values.len() {
                    return Err(Error::BadInput("isotonic prior needs matching xs/values".into()));
                }
                if xs.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::BadInput("isotonic xs must be ascending".into()));
                }
                if values.windows(2).any(|w| w[0] > w[1] + 1e-12) {
                    return Err(Error::BadInput("isotonic values must be nondecreasing".into()));
                }
                if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::BadInput("isotonic values must lie in [0,1]".into()));
                }
            }
        }
        Ok(())
    }

    /// Evaluate the prior at one covariate row.
    pub fn eval(&self, x_row: &[f64]) -> f64 {
        match self {
            PriorFn::Constant { value } => *value,
            PriorFn::Link { link, beta0, beta } => {
                let z = beta0 + dot_prefix(beta, x_row);
                link.eval(z)
            }
            PriorFn::Isotonic { covariate, xs, values } => {
                let x = x_row.get(*covariate).copied().unwrap_or(0.0);
                // index of last training point <= x
                let idx = xs.partition_point(|&t| t <= x);
                if idx == 0 {
                    values[0]
                } else {
                    values[idx - 1]
                }
            }
        }
    }

    /// Evaluate the prior at every covariate row of a dataset.
    pub fn eval_all(&self, data: &Dataset) -> Vec<f64> {
        (0..data.n()).map(|i| self.eval(data.x_row(i))).collect()
    }
}

fn dot_prefix(beta: &[f64], x: &[f64]) -> f64 {
    beta.iter().zip(x).map(|(b, v)| b * v).sum()
}

/// A fitted (prior, signal, null) bundle with its likelihood and lFDRs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureFit {
    pub prior: PriorFn,
    pub signal: SignalDensity,
    pub null: NullDensity,
    pub loglik: f64,
    pub lfdr: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Per-observation prior evaluations pi(X_i).
    pub pi_values: Vec<f64>,
    /// Per-observation signal density values f1(Y_i).
    pub f1_values: Vec<f64>,
    #[serde(default)]
    pub diagnostics: FitDiagnostics,
}

/// Reproducibility and solver metadata carried along with a fit.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Joint log-likelihood after each EM iteration (fMLE only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loglik_trace: Vec<f64>,
    /// Number of per-observation mixture densities clamped at the floor.
    #[serde(default)]
    pub clamped_terms: usize,
    /// Solver events (divergence retries, degenerate objectives, ...).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    /// Atom grid used for Gaussian-mixture fitting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_grid: Option<Vec<f64>>,
    /// Spline basis metadata when the design was expanded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spline: Option<SplineMeta>,
    /// Convergence metric name for the EM stopping rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_metric: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl MixtureFit {
    /// Assemble a fit from its parts, recomputing likelihood and lFDRs.
    pub fn from_parts(
        prior: PriorFn,
        signal: SignalDensity,
        null: NullDensity,
        data: &Dataset,
        iterations: usize,
        converged: bool,
    ) -> Result<Self> {
        prior.validate()?;
        signal.validate()?;
        null.validate()?;
        let pi_values = prior.eval_all(data);
        let f1_values: Vec<f64> = data.y().iter().map(|&y| signal.pdf(y)).collect();
        let f0_values: Vec<f64> = data.y().iter().map(|&y| null.pdf(y)).collect();
        let ll = loglik_from_parts(&pi_values, &f1_values, &f0_values, Clamping::Floor)?;
        let lfdr = lfdr_from_parts(&pi_values, &f1_values, &f0_values, Clamping::Floor)?;
        Ok(MixtureFit {
            prior,
            signal,
            null,
            loglik: ll.value,
            lfdr,
            iterations,
            converged,
            pi_values,
            f1_values,
            diagnostics: FitDiagnostics {
                clamped_terms: ll.clamped,
                ..FitDiagnostics::default()
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signal_density_examples() {
        let single = SignalDensity::GaussMix(MixingMeasure::new(vec![0.0], vec![1.0]).unwrap());
        assert!((single.pdf(0.0) - 0.3989422804).abs() < 1e-9);

        let two = SignalDensity::GaussMix(
            MixingMeasure::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap(),
        );
        assert!((two.pdf(0.0) - 0.2419707245).abs() < 1e-9);

        let step = SignalDensity::Decreasing {
            breakpoints: vec![0.5, 1.0],
            levels: vec![1.6, 0.4],
        };
        step.validate().unwrap();
        assert_eq!(step.pdf(0.25), 1.6);
        assert_eq!(step.pdf(0.75), 0.4);
        assert_eq!(step.pdf(1.25), 0.0);
        assert_eq!(step.pdf(-0.1), 0.0);
    }

    #[test]
    fn mixing_measure_invariants_enforced() {
        assert!(MixingMeasure::new(vec![1.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(MixingMeasure::new(vec![0.0, 1.0], vec![0.6, 0.6]).is_err());
        assert!(MixingMeasure::new(vec![0.0, 1.0], vec![-0.1, 1.1]).is_err());
    }

    #[test]
    fn dataset_rejects_bad_shapes() {
        assert!(Dataset::new(vec![], Mat::zeros(0, 0)).is_err());
        assert!(Dataset::new(vec![1.0], Mat::zeros(2, 1)).is_err());
        assert!(Dataset::new(vec![f64::NAN], Mat::zeros(1, 0)).is_err());
    }

    #[test]
    fn isotonic_prior_step_extension() {
        let p = PriorFn::Isotonic {
            covariate: 0,
            xs: vec![1.0, 2.0, 3.0],
            values: vec![0.1, 0.5, 0.9],
        };
        p.validate().unwrap();
        assert_eq!(p.eval(&[0.5]), 0.1); // left extension
        assert_eq!(p.eval(&[1.0]), 0.1);
        assert_eq!(p.eval(&[2.5]), 0.5); // nearest smaller
        assert_eq!(p.eval(&[9.0]), 0.9);
    }

    #[test]
    fn link_eval_and_inverse_agree() {
        for link in [LinkKind::Logistic, LinkKind::Probit, LinkKind::CLogLog] {
            for &p in &[0.05, 0.3, 0.5, 0.77, 0.99] {
                let z = link.inverse(p);
                assert!((link.eval(z) - p).abs() < 1e-9, "{link:?} at {p}");
            }
        }
    }

    #[test]
    fn link_log_forms_match_direct() {
        // moderate z, where the direct forms are exactly representable
        for link in [LinkKind::Logistic, LinkKind::Probit, LinkKind::CLogLog] {
            for &z in &[-2.0, -1.0, 0.0, 0.7, 2.0] {
                let g = link.eval(z);
                assert!((link.log_eval(z) - g.ln()).abs() < 1e-9, "{link:?} log g at {z}");
                assert!(
                    (link.log_one_minus(z) - (1.0 - g).ln()).abs() < 1e-8,
                    "{link:?} log(1-g) at {z}"
                );
            }
        }
        // tails, where 1 - g underflows against 1.0 and the direct forms die
        assert!((LinkKind::CLogLog.log_one_minus(4.0) + 4.0f64.exp()).abs() < 1e-12);
        assert!((LinkKind::Logistic.log_eval(-40.0) + 40.0).abs() < 1e-12);
        let lp = log_std_normal_cdf(-20.0);
        assert!(lp.is_finite() && (lp - (phi(20.0) / 20.0).ln()).abs() < 0.01);
    }

    #[test]
    fn link_derivatives_match_finite_differences() {
        let h = 1e-6;
        for link in [LinkKind::Logistic, LinkKind::Probit, LinkKind::CLogLog] {
            for &z in &[-2.0, -0.3, 0.0, 1.1, 2.5] {
                let fd1 = (link.eval(z + h) - link.eval(z - h)) / (2.0 * h);
                assert!((link.deriv(z) - fd1).abs() < 1e-7);
                let fd2 = (link.deriv(z + h) - link.deriv(z - h)) / (2.0 * h);
                assert!((link.deriv2(z) - fd2).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn log_cdf_deep_tail_is_finite_and_smooth() {
        let a = log_std_normal_cdf(-7.999);
        let b = log_std_normal_cdf(-8.001);
        assert!(a.is_finite() && b.is_finite());
        assert!((a - b).abs() < 0.05);
        assert!((log_std_normal_cdf(-30.0) + 0.5 * 900.0).abs() / 450.0 < 0.02);
    }
}
