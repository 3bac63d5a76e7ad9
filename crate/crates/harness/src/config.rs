//! JSON experiment configurations.

use std::fmt;
use std::path::{Path, PathBuf};

use dwr_core::synthetic::{EnvironmentSpec, GraphKind, OutcomeSpec, SyntheticDesign};
use dwr_core::HyperParams;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MethodName {
    #[serde(rename = "OLS")]
    Ols,
    Lasso,
    Ridge,
    #[serde(rename = "IILasso")]
    IiLasso,
    #[serde(rename = "DWR")]
    Dwr,
}

impl MethodName {
    pub const ALL: [MethodName; 5] = [
        MethodName::Ols,
        MethodName::Lasso,
        MethodName::Ridge,
        MethodName::IiLasso,
        MethodName::Dwr,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodName::Ols => "OLS",
            MethodName::Lasso => "Lasso",
            MethodName::Ridge => "Ridge",
            MethodName::IiLasso => "IILasso",
            MethodName::Dwr => "DWR",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Candidate values for each DWR penalty; every combination is tried.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwrGrid {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub lambda3: Vec<f64>,
    pub lambda4: Vec<f64>,
}

impl Default for DwrGrid {
    fn default() -> Self {
        let hp = HyperParams::default();
        DwrGrid {
            lambda1: vec![hp.lambda1],
            lambda2: vec![hp.lambda2],
            lambda3: vec![hp.lambda3],
            lambda4: vec![hp.lambda4],
        }
    }
}

impl DwrGrid {
    /// The same values for every penalty.
    pub fn uniform(values: &[f64]) -> Self {
        DwrGrid {
            lambda1: values.to_vec(),
            lambda2: values.to_vec(),
            lambda3: values.to_vec(),
            lambda4: values.to_vec(),
        }
    }

    pub fn combinations(&self, base: &HyperParams) -> Vec<HyperParams> {
        let mut out = Vec::new();
        for &lambda1 in &self.lambda1 {
            for &lambda2 in &self.lambda2 {
                for &lambda3 in &self.lambda3 {
                    for &lambda4 in &self.lambda4 {
                        out.push(HyperParams {
                            lambda1,
                            lambda2,
                            lambda3,
                            lambda4,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda1", &self.lambda1),
            ("lambda2", &self.lambda2),
            ("lambda3", &self.lambda3),
            ("lambda4", &self.lambda4),
        ] {
            if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(HarnessError::Config(format!(
                    "dwr_grid.{name} must be a nonempty list of nonnegative values"
                )));
            }
        }
        Ok(())
    }
}

pub fn default_r_test_grid() -> Vec<f64> {
    vec![-3.0, -2.5, -2.0, -1.7, -1.5, -1.3, 1.3, 1.5, 1.7, 2.0, 2.5, 3.0]
}

pub fn default_hyper_grid() -> Vec<f64> {
    vec![0.01, 0.1, 1.0, 10.0, 100.0]
}

fn default_replications() -> usize {
    50
}

fn default_methods() -> Vec<MethodName> {
    MethodName::ALL.to_vec()
}

fn default_test_sets() -> usize {
    10
}

fn default_validation_sets() -> usize {
    1
}

fn default_vb_fraction() -> f64 {
    0.1
}

/// One synthetic experiment: a training environment per replication,
/// every method fitted on it and evaluated on test environments at each
/// bias rate of `r_test_grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub graph: GraphKind,
    #[serde(default)]
    pub outcome: OutcomeSpec,
    pub n: usize,
    pub p: usize,
    pub r_train: f64,
    #[serde(default = "default_r_test_grid")]
    pub r_test_grid: Vec<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodName>,
    /// Penalty grid for the baselines (Lasso and Ridge `lambda1`, IILasso
    /// `lambda1` and `lambda2`).
    #[serde(default = "default_hyper_grid")]
    pub hyper_grid: Vec<f64>,
    #[serde(default)]
    pub base_seed: u64,
    /// Penalty grid for DWR.
    #[serde(default)]
    pub dwr_grid: DwrGrid,
    /// Solver settings for DWR; its penalties are taken from `dwr_grid`.
    #[serde(default)]
    pub dwr: HyperParams,
    /// Test datasets drawn per bias rate; their RMSEs are averaged.
    #[serde(default = "default_test_sets")]
    pub test_sets_per_rate: usize,
    /// Size of each test dataset; defaults to `n`.
    #[serde(default)]
    pub test_n: Option<usize>,
    /// Validation datasets drawn at `r_train` for grid search.
    #[serde(default = "default_validation_sets")]
    pub validation_sets: usize,
    #[serde(default = "default_vb_fraction")]
    pub vb_fraction: f64,
}

impl ScenarioConfig {
    /// Scenario defaults with the given design and training environment.
    pub fn new(graph: GraphKind, n: usize, p: usize, r_train: f64) -> Self {
        ScenarioConfig {
            graph,
            outcome: OutcomeSpec::default(),
            n,
            p,
            r_train,
            r_test_grid: default_r_test_grid(),
            replications: default_replications(),
            methods: default_methods(),
            hyper_grid: default_hyper_grid(),
            base_seed: 0,
            dwr_grid: DwrGrid::default(),
            dwr: HyperParams::default(),
            test_sets_per_rate: default_test_sets(),
            test_n: None,
            validation_sets: default_validation_sets(),
            vb_fraction: default_vb_fraction(),
        }
    }

    pub fn design(&self) -> SyntheticDesign {
        SyntheticDesign::new(self.graph, self.p, self.outcome)
    }

    pub fn environment(&self, bias_rate: f64, n: usize) -> EnvironmentSpec {
        EnvironmentSpec {
            bias_rate,
            vb_fraction: self.vb_fraction,
            target_n: n,
        }
    }

    pub fn test_n(&self) -> usize {
        self.test_n.unwrap_or(self.n)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.replications < 1 {
            return bad("replications must be at least 1".into());
        }
        if self.r_test_grid.len() < 2 {
            return bad("r_test_grid needs at least two bias rates".into());
        }
        if self.test_sets_per_rate < 1 || self.validation_sets < 1 {
            return bad("test_sets_per_rate and validation_sets must be at least 1".into());
        }
        if self.hyper_grid.is_empty() || self.hyper_grid.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("hyper_grid must be a nonempty list of positive values".into());
        }
        self.dwr_grid.validate()?;
        self.dwr.validate().map_err(|e| HarnessError::Config(format!("dwr: {e}")))?;
        self.design()
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        for &r in std::iter::once(&self.r_train).chain(&self.r_test_grid) {
            self.environment(r, self.n.max(2))
                .validate(self.p)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        if self.n < self.p || self.test_n() < 2 {
            return bad(format!("n = {} is too small for p = {}", self.n, self.p));
        }
        Ok(())
    }
}

/// Real-data experiment: one file per environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealDataConfig {
    pub train_csv: PathBuf,
    #[serde(default)]
    pub validation_csvs: Vec<PathBuf>,
    pub test_csvs: Vec<PathBuf>,
    pub outcome_column: String,
    /// Empty means every column of the training file except the outcome.
    #[serde(default)]
    pub feature_columns: Vec<String>,
    #[serde(default = "default_real_methods")]
    pub methods: Vec<MethodName>,
    #[serde(default = "default_hyper_grid")]
    pub hyper_grid: Vec<f64>,
    /// Adds `lambda1 = 0` (plain least squares) to the Lasso grid.
    #[serde(default = "default_true")]
    pub lasso_includes_ols: bool,
    #[serde(default)]
    pub dwr_grid: DwrGrid,
    #[serde(default)]
    pub dwr: HyperParams,
}

fn default_real_methods() -> Vec<MethodName> {
    vec![
        MethodName::Lasso,
        MethodName::Ridge,
        MethodName::IiLasso,
        MethodName::Dwr,
    ]
}

fn default_true() -> bool {
    true
}

impl RealDataConfig {
    pub fn validate(&self) -> Result<()> {
        if self.test_csvs.len() < 2 {
            return Err(HarnessError::Config(
                "at least two test files are needed for stability metrics".into(),
            ));
        }
        if self.feature_columns.contains(&self.outcome_column) {
            return Err(HarnessError::Config(format!(
                "outcome column {} is also listed as a feature",
                self.outcome_column
            )));
        }
        if self.hyper_grid.is_empty() || self.hyper_grid.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(HarnessError::Config(
                "hyper_grid must be a nonempty list of positive values".into(),
            ));
        }
        self.dwr_grid.validate()?;
        self.dwr.validate().map_err(|e| HarnessError::Config(format!("dwr: {e}")))
    }
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}
