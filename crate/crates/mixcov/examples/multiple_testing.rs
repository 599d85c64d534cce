//! Plug-in multiple testing: fit the model, estimate per-observation lFDRs,
//! reject with the adaptive running-mean rule, and compare the realized
//! error rates against the oracle that knows the true lFDRs.
//!
//! Run with: cargo run --release --example multiple_testing

use mixcov::inference::{fdr_tpr, reject_at_level};
use mixcov::model::NullDensity;
use mixcov::simlab::{design_for_fitting, fit_method, simulate, Method, SimSetting};
use mixcov::simlab::{F1Kind, SKind};

fn main() -> mixcov::Result<()> {
    let setting = SimSetting::new(SKind::A, F1Kind::I, 3000, 41);
    let rep = simulate(&setting);
    let data = design_for_fitting(&rep, &setting)?;
    let fit = fit_method(Method::Fmle, &data, &NullDensity::StdNormal)?;

    println!("level  method  rejections  FDP    TPP");
    for alpha in [0.05, 0.10, 0.20] {
        let fitted = reject_at_level(&fit.lfdr, alpha)?;
        let (fdp, tpp) = fdr_tpr(&fitted.rejected, &rep.z_true);
        println!(
            "{alpha:<6.2} fitted  {:<11} {fdp:<6.3} {tpp:.3}",
            fitted.rejected.len()
        );
        let oracle = reject_at_level(&rep.lfdr_true, alpha)?;
        let (ofdp, otpp) = fdr_tpr(&oracle.rejected, &rep.z_true);
        println!(
            "{alpha:<6.2} oracle  {:<11} {ofdp:<6.3} {otpp:.3}",
            oracle.rejected.len()
        );
    }

    let report = reject_at_level(&fit.lfdr, 0.10)?;
    println!(
        "\nat the 0.10 level: k_hat {}, threshold {:?}, realized average lFDR {:.4}",
        report.k_hat, report.threshold_lfdr, report.realized_avg_lfdr
    );
    Ok(())
}
