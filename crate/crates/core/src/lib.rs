//! High-dimensional covariance estimation for portfolio allocation.
//!
//! The crate covers the whole chain from a population model or a price file
//! to portfolio metrics:
//!
//! * [`models`]: nested, one-factor and diagonal population covariances and
//!   the `Y = √Σ X` sampler.
//! * [`estimators`]: sample, linear shrinkage, average-linkage filtering,
//!   rotation-invariant nonlinear shrinkage, the regularized fixed-point
//!   estimator and their two-step compositions.
//! * [`allocation`]: minimum variance (with and without short selling),
//!   hierarchical risk parity and the uniform portfolio.
//! * [`metrics`]: concentration, leverage, risk diversification, realized
//!   risk and walk-forward performance statistics.
//! * [`simulation`]: seeded Monte Carlo sweeps and fixed-size tables.
//! * [`backtest`]: price cleaning, moving-window tracks and walk-forward runs.

pub mod allocation;
pub mod backtest;
pub mod cli;
pub mod cluster;
pub mod error;
pub mod estimators;
pub mod matrix;
pub mod metrics;
pub mod models;
pub mod report;
pub mod simulation;

pub use error::{Error, Result};
pub use matrix::{CovarianceMatrix, DataPanel, Spectrum, WeightVector};
