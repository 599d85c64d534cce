//! Reusable convex solvers backing the M-steps and marginal methods.

mod grenander;
mod link;
mod normal;
mod pava;
mod pgd;
mod simplex;

pub use grenander::grenander_weighted;
pub use link::{bfgs_maximize, fit_link_guarded, fit_link_weighted_bernoulli, BfgsResult, LinkFit, LinkObjective};
pub use normal::fit_param_normal_weighted;
pub use pava::weighted_isotonic_ls;
pub use pgd::{
    kwmle_weighted, kwmle_weighted_from, mixture_weights_pgd, normalize_exact_weights,
    GaussKernel, PgdOutcome,
};
pub use simplex::simplex_project;
