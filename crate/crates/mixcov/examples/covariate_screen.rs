//! Do the covariates matter at all? Distance covariance with a permutation
//! test on two datasets: one where the prior truly varies with x, one where
//! it is constant.
//!
//! Run with: cargo run --release --example covariate_screen

use mixcov::inference::dcov_permutation_test;
use mixcov::linalg::Mat;
use mixcov::simlab::{simulate, F1Kind, SKind, SimSetting};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> mixcov::Result<()> {
    // dependent case: the steep prior surface ties y to x1
    let setting = SimSetting::new(SKind::D, F1Kind::I, 800, 5);
    let rep = simulate(&setting);
    let dependent = dcov_permutation_test(rep.data.x(), rep.data.y(), 199, 17)?;
    println!(
        "dependent data:   statistic {:.5}  p-value {:.4} ({} permutations)",
        dependent.statistic, dependent.p_value, dependent.permutations
    );

    // independent case: pure noise responses against fresh covariates
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let rows: Vec<Vec<f64>> = (0..800)
        .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
        .collect();
    let noise: Vec<f64> = (0..800).map(|_| StandardNormal.sample(&mut rng)).collect();
    let x = Mat::from_rows(&rows);
    let independent = dcov_permutation_test(&x, &noise, 199, 17)?;
    println!(
        "independent data: statistic {:.5}  p-value {:.4} ({} permutations)",
        independent.statistic, independent.p_value, independent.permutations
    );
    Ok(())
}
