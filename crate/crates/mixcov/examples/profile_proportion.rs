//! The profiled one-dimensional search for the overall signal proportion:
//! for each alpha on a grid, fit the signal from the marginal likelihood
//! and the prior from the joint likelihood, then print the profile.
//!
//! Run with: cargo run --release --example profile_proportion

use mixcov::marginal::{marginal1_profile, PiClass, ProfileOptions};
use mixcov::model::NullDensity;
use mixcov::simlab::{design_for_fitting, simulate, F1Kind, SKind, SimSetting};

fn main() -> mixcov::Result<()> {
    let setting = SimSetting::new(SKind::D, F1Kind::I, 3000, 7);
    let rep = simulate(&setting);
    let data = design_for_fitting(&rep, &setting)?;

    let opts = ProfileOptions {
        grid: Some((1..=20).map(|k| k as f64 / 20.0).collect()),
        pi_class: PiClass::LinkLogistic,
        ..ProfileOptions::default()
    };
    let res = marginal1_profile(&data, &NullDensity::StdNormal, &opts)?;

    println!("alpha    profiled loglik");
    for (alpha, value) in &res.profile {
        let marker = if *alpha == res.pibar_hat { "  <- selected" } else { "" };
        println!("{alpha:<8.2} {value:.6}{marker}");
    }
    let truth = mixcov::simlab::pibar(SKind::D);
    println!("\nselected proportion {:.2} (population value {truth:.3})", res.pibar_hat);
    Ok(())
}
