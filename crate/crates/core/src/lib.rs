//! Sensitivity analysis for average causal effects under unobserved
//! confounding.
//!
//! Observational `(treatment, outcome)` pairs are modelled as strictly
//! increasing transforms of a bivariate Gaussian copula base with correlation
//! `rho`. Fixing `rho` identifies the interventional distributions, so
//! sweeping it yields a curve of average causal effects, the `rho` that
//! explains the effect away, and empirical effect bounds.

pub mod causal;
pub mod codec;
pub mod copula;
pub mod data;
pub mod dgp;
pub mod error;
pub mod flow;
pub mod optim;
pub mod train;

pub use error::{Error, Result};
