//! Experiment orchestration for distributionally weighted regression:
//! scenario replications with validation-based tuning, real-data runs over
//! per-environment CSV files, penalty sweeps and plot-ready outputs.

pub mod config;
pub mod error;
pub mod methods;
pub mod output;
pub mod plots;
pub mod real;
pub mod scenario;
pub mod seeds;
pub mod sweep;

pub use config::{DwrGrid, MethodName, RealDataConfig, ScenarioConfig};
pub use error::{HarnessError, Result};
pub use real::{run_real, run_real_data, RealResults};
pub use scenario::{run_scenario, run_scenario_with, RunOptions, ScenarioResults};
pub use sweep::{sweep_lambda, SweepParam, SweepRow};
