//! The non-identifiability shift: maps (pi, F1) to an observationally
//! equivalent pair (pi/(1-c), c F0 + (1-c) F1).

use super::{MixingMeasure, NullDensity, PriorFn, SignalDensity};
use crate::error::{Error, Result};

/// Construct the shifted pair (pi', f1') with pi'(x) = pi(x)/(1-c) and
/// F1' = c F0 + (1-c) F1. Both pairs induce identical conditional densities.
///
/// Supported in-class representations: Constant and Isotonic priors (the
/// scaled prior stays in its class) with a GaussMix signal and standard
/// normal null, for c in [0, 1).
pub fn c_shift(
    prior: &PriorFn,
    f1: &SignalDensity,
    f0: &NullDensity,
    c: f64,
) -> Result<(PriorFn, SignalDensity)> {
    if c == 1.0 {
        return Err(Error::InfeasibleShift("c must differ from 1".into()));
    }
    if c == 0.0 {
        return Ok((prior.clone(), f1.clone()));
    }
    if !(0.0..1.0).contains(&c) {
        return Err(Error::InfeasibleShift(format!(
            "c = {c}: the shifted signal density is only representable for c in [0, 1)"
        )));
    }
    if *f0 != NullDensity::StdNormal {
        return Err(Error::InfeasibleShift(
            "shifted signal is representable as a Gaussian mixture only for the standard normal null".into(),
        ));
    }
    let measure = match f1 {
        SignalDensity::GaussMix(m) => m,
        _ => {
            return Err(Error::InfeasibleShift(
                "only Gaussian-mixture signals support the in-class shift".into(),
            ))
        }
    };

    let scale = 1.0 / (1.0 - c);
    let shifted_prior = match prior {
        PriorFn::Constant { value } => {
            let v = value * scale;
            if v > 1.0 + 1e-12 {
                return Err(Error::InfeasibleShift(format!("scaled constant prior {v} exceeds 1")));
            }
            PriorFn::Constant { value: v.min(1.0) }
        }
        PriorFn::Isotonic { covariate, xs, values } => {
            let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
            if scaled.iter().any(|&v| v > 1.0 + 1e-12) {
                return Err(Error::InfeasibleShift("scaled isotonic prior exceeds 1".into()));
            }
            PriorFn::Isotonic {
                covariate: *covariate,
                xs: xs.clone(),
                values: scaled.iter().map(|v| v.min(1.0)).collect(),
            }
        }
        PriorFn::Link { .. } => {
            return Err(Error::InfeasibleShift(
                "a scaled link prior leaves the link class".into(),
            ))
        }
    };

    // f1' = c*phi + (1-c)*f1: fold an atom at 0 with weight c into the measure
    let mut atoms = Vec::with_capacity(measure.len() + 1);
    let mut weights = Vec::with_capacity(measure.len() + 1);
    let mut inserted = false;
    for (&a, &w) in measure.atoms.iter().zip(&measure.weights) {
        if !inserted && (a - 0.0).abs() < 1e-15 {
            atoms.push(a);
            weights.push((1.0 - c) * w + c);
            inserted = true;
        } else {
            if !inserted && a > 0.0 {
                atoms.push(0.0);
                weights.push(c);
                inserted = true;
            }
            atoms.push(a);
            weights.push((1.0 - c) * w);
        }
    }
    if !inserted {
        atoms.push(0.0);
        weights.push(c);
    }
    let shifted_signal = SignalDensity::GaussMix(MixingMeasure::new(atoms, weights)?);
    Ok((shifted_prior, shifted_signal))
}
