//! Real-data runner: one training file, validation files for tuning and
//! one test file per environment.

use std::fs::File;
use std::path::{Path, PathBuf};

use dwr_core::io::read_table;
use dwr_core::metrics::{distribution_distance, stability_metrics};
use dwr_core::Dataset;
use serde::{Deserialize, Serialize};

use crate::config::{MethodName, RealDataConfig};
use crate::error::{HarnessError, Result};
use crate::methods::{select_and_fit, FittedModel, SearchSpace};
use crate::output::{write_rows, HeaderOnly};

/// Environments of a real-data experiment, already parsed.
#[derive(Debug, Clone, PartialEq)]
pub struct RealData {
    pub train: Dataset,
    pub validation: Vec<Dataset>,
    /// Test environments with the label used in the output.
    pub tests: Vec<(String, Dataset)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealRow {
    pub method: MethodName,
    pub test_file: String,
    pub distance: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealSummary {
    pub method: MethodName,
    pub average_error: f64,
    pub stability_error: f64,
    pub train_rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealResults {
    /// Sorted by ascending distance to the training environment, then by
    /// method order.
    pub rows: Vec<RealRow>,
    pub summary: Vec<RealSummary>,
    pub models: Vec<FittedModel>,
}

impl RealResults {
    pub fn summary_for(&self, method: MethodName) -> Option<&RealSummary> {
        self.summary.iter().find(|s| s.method == method)
    }

    /// Writes `real_results.csv` and `real_summary.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        write_rows(&dir.join("real_results.csv"), &self.rows)?;
        write_rows(&dir.join("real_summary.csv"), &self.summary)
    }
}

impl HeaderOnly for RealRow {
    fn header() -> &'static [&'static str] {
        &["method", "test_file", "distance", "rmse"]
    }
}

impl HeaderOnly for RealSummary {
    fn header() -> &'static [&'static str] {
        &["method", "average_error", "stability_error", "train_rmse"]
    }
}

fn read_file(path: &Path, outcome: &str, features: Option<&[String]>) -> Result<Dataset> {
    let f = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_table(f, outcome, features).map_err(|e| HarnessError::ingestion(path, e))
}

/// Parses every file of the config against the training schema.
pub fn load_real(cfg: &RealDataConfig) -> Result<RealData> {
    cfg.validate()?;
    let features = (!cfg.feature_columns.is_empty()).then_some(cfg.feature_columns.as_slice());
    let train = read_file(&cfg.train_csv, &cfg.outcome_column, features)?;
    let schema = train.feature_names().to_vec();
    let load = |p: &PathBuf| read_file(p, &cfg.outcome_column, Some(&schema));
    let validation = cfg.validation_csvs.iter().map(load).collect::<Result<_>>()?;
    let tests = cfg
        .test_csvs
        .iter()
        .map(|p| Ok((p.display().to_string(), load(p)?)))
        .collect::<Result<_>>()?;
    Ok(RealData {
        train,
        validation,
        tests,
    })
}

pub fn run_real(cfg: &RealDataConfig) -> Result<RealResults> {
    run_real_data(cfg, &load_real(cfg)?)
}

/// Runs the experiment on parsed data; the file paths of `cfg` are unused.
pub fn run_real_data(cfg: &RealDataConfig, data: &RealData) -> Result<RealResults> {
    cfg.validate()?;
    if data.tests.len() < 2 {
        return Err(HarnessError::Config("at least two test environments are needed".into()));
    }
    let space = SearchSpace {
        hyper_grid: cfg.hyper_grid.clone(),
        dwr_grid: cfg.dwr_grid.clone(),
        dwr: cfg.dwr.clone(),
        lasso_includes_ols: cfg.lasso_includes_ols,
    };
    let distances = data
        .tests
        .iter()
        .map(|(_, t)| distribution_distance(data.train.x(), t.x()))
        .collect::<dwr_core::Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut models = Vec::new();
    for &method in &cfg.methods {
        let model = select_and_fit(method, &data.train, &data.validation, &space, cfg.dwr.seed)?;
        let mut rmses = Vec::with_capacity(data.tests.len());
        for ((label, t), &distance) in data.tests.iter().zip(&distances) {
            let rmse = model.rmse(t)?;
            rmses.push(rmse);
            rows.push(RealRow {
                method,
                test_file: label.clone(),
                distance,
                rmse,
            });
        }
        let (average_error, stability_error) = stability_metrics(&rmses)?;
        summary.push(RealSummary {
            method,
            average_error,
            stability_error,
            train_rmse: model.rmse(&data.train)?,
        });
        models.push(model);
    }
    // stable sort keeps method order within equal distances
    rows.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    Ok(RealResults {
        rows,
        summary,
        models,
    })
}
