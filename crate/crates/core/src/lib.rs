//! Decorrelated weighting regression (DWR).
//!
//! Learns per-sample weights that remove first-moment correlation between
//! covariates, then fits a weighted, L1-penalised linear model on the
//! reweighted sample. When the linear model omits nonlinear terms of the
//! stable features, the reweighting stops unstable features from acting as
//! proxies for the omitted terms, which keeps coefficient estimates and
//! prediction error stable across shifted test environments.
//!
//! The crate also ships the comparison regressors ([`baselines`]), the
//! biased-selection data generator ([`synthetic`]), and the stability
//! metrics ([`metrics`]) used to evaluate them.

pub mod baselines;
pub mod dataset;
pub mod decorrelation;
pub mod dwr;
pub mod error;
pub mod io;
pub mod kde;
pub mod linalg;
pub mod metrics;
pub mod synthetic;
pub mod wls;

pub use dataset::{Dataset, GroundTruth, WeightVector};
pub use dwr::{dwr_fit, total_objective, total_objective_gradient, FitResult, HyperParams};
pub use error::{Error, Result};
