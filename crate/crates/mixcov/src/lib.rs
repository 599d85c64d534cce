//! Estimation and multiple testing for the covariate-dependent two-groups
//! model `Y | X = x ~ pi(x) f1 + (1 - pi(x)) f0` with a known null f0.
//!
//! The crate provides:
//! - full joint maximum likelihood over nonparametric signal and prior
//!   classes, computed by an EM scheme with decoupled M-steps ([`em`]);
//! - two marginal estimators, one profiling the overall signal proportion
//!   and one built on nonlinear least squares with a sandwich covariance
//!   ([`marginal`]);
//! - the convex workhorses behind the M-steps: simplex projection,
//!   projected gradient ascent for grid mixtures, weighted PAVA and the
//!   weighted monotone-density estimator, quasi-Newton link fitting
//!   ([`optim`]);
//! - lFDR-based rejection rules and a distance-covariance screen for
//!   whether covariates matter at all ([`inference`]);
//! - a simulation laboratory with reproducible replicates, estimation and
//!   testing metrics, and a likelihood-path scan along the scaling
//!   submodel ([`simlab`]).
//!
//! See the `examples/` directory for one runnable program per capability,
//! and the `mixcov` binary for CSV-in / JSON-out batch use.

pub mod cli;
pub mod em;
pub mod error;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod marginal;
pub mod model;
pub mod optim;
pub mod simlab;

pub use error::{Error, Result};
