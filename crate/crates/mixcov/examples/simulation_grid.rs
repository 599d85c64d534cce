//! A small replicate study: run the estimators on a benchmark setting and
//! print the tidy metric rows the harness produces.
//!
//! Run with: cargo run --release --example simulation_grid

use mixcov::simlab::{run_setting, Method, SimSetting};
use mixcov::simlab::{F1Kind, SKind};

fn main() -> mixcov::Result<()> {
    let setting = SimSetting::new(SKind::A, F1Kind::I, 1000, 8);
    let rows = run_setting(
        &setting,
        3,
        &[Method::Marginal1, Method::Marginal2, Method::Oracle],
        &[0.05, 0.10],
        1,
    )?;

    println!("setting,n,replicate,seed,method,metric,value");
    for row in rows.iter().filter(|r| r.metric != "seconds") {
        println!(
            "{},{},{},{},{},{},{}",
            row.setting, row.n, row.replicate, row.seed, row.method, row.metric, row.value
        );
    }

    // quick aggregate over replicates
    println!("\nmean FDP at the 0.10 level:");
    for method in ["marginal1", "marginal2", "oracle"] {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r.method == method && r.metric == "fdp@0.10")
            .map(|r| r.value)
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len().max(1) as f64;
        println!("  {method}: {mean:.3}");
    }
    Ok(())
}
