//! The least squares route: estimate the prior coefficients and the signal
//! mean from the regression of Y on X, with sandwich standard errors.
//!
//! Run with: cargo run --release --example regression_route

use mixcov::linalg::Mat;
use mixcov::marginal::{marginal2_lse, LseOptions};
use mixcov::model::{Dataset, LinkKind, NullDensity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> mixcov::Result<()> {
    // one covariate, logistic prior, normal signal shifted to mu* = 2.5
    let n = 4000;
    let (beta0, beta1, mu_star) = (-1.0, 2.0, 2.5);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.random_range(0.0..1.0);
        let pi = LinkKind::Logistic.eval(beta0 + beta1 * x);
        let z: f64 = StandardNormal.sample(&mut rng);
        y.push(if rng.random_range(0.0..1.0) < pi { z + mu_star } else { z });
        rows.push(vec![x]);
    }
    let data = Dataset::new(y, Mat::from_rows(&rows))?;

    let res = marginal2_lse(&data, &NullDensity::StdNormal, &LseOptions::default())?;
    println!("truth:    beta0 {beta0:.3}  beta1 {beta1:.3}  mu {mu_star:.3}");
    println!("estimate: beta0 {:.3}  beta1 {:.3}  mu {:.3}", res.beta0, res.beta[0], res.mu);
    println!("residual sum of squares {:.1} over the {}-point mu grid", res.sse, res.mu_grid.len());

    if let Some(cov) = &res.covariance {
        // diagonal of the asymptotic covariance scaled by 1/n gives squared
        // standard errors
        let labels = ["beta0", "beta1", "mu   "];
        println!("\nsandwich standard errors:");
        for (k, label) in labels.iter().enumerate() {
            let se = (cov.get(k, k) / n as f64).sqrt();
            println!("  {label} {se:.4}");
        }
    }
    Ok(())
}
