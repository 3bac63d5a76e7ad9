//! Synthetic scenario runner: replications of train / select / evaluate.

use std::path::Path;

use dwr_core::metrics::{beta_error, stability_metrics};
use dwr_core::synthetic::select_environment;
use dwr_core::{Dataset, WeightVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{MethodName, ScenarioConfig};
use crate::error::{HarnessError, Result};
use crate::methods::{select_and_fit, FittedModel, SearchSpace};
use crate::output::write_rows;
use crate::seeds;

/// Fraction of failed (method, replication) cells above which the whole
/// scenario is reported as a numerical failure.
pub const MAX_FAILURE_RATE: f64 = 0.2;

/// One row per method and replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: MethodName,
    pub n: usize,
    pub p: usize,
    pub r_train: f64,
    pub beta_s_error: f64,
    pub beta_v_error: f64,
    pub average_error: f64,
    pub stability_error: f64,
    pub seed: u64,
}

/// RMSE of one fitted model at one test bias rate, averaged over that
/// rate's test environments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub method: MethodName,
    pub replication: usize,
    pub seed: u64,
    pub r_test: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub method: MethodName,
    pub replication: usize,
    pub seed: u64,
    pub message: String,
}

/// Mean and sample variance of each metric over successful replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: MethodName,
    pub replications: usize,
    pub beta_s_error_mean: f64,
    pub beta_s_error_var: f64,
    pub beta_v_error_mean: f64,
    pub beta_v_error_var: f64,
    pub average_error_mean: f64,
    pub average_error_var: f64,
    pub stability_error_mean: f64,
    pub stability_error_var: f64,
}

/// Training data and learned weights of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationDetail {
    pub replication: usize,
    pub seed: u64,
    pub train: Dataset,
    pub dwr_weights: Option<WeightVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResults {
    pub rows: Vec<ResultRow>,
    pub rate_rows: Vec<RateRow>,
    pub failures: Vec<CellFailure>,
    pub summary: Vec<MethodSummary>,
    /// Filled only when requested.
    pub details: Vec<ReplicationDetail>,
}

impl ScenarioResults {
    pub fn summary_for(&self, method: MethodName) -> Option<&MethodSummary> {
        self.summary.iter().find(|s| s.method == method)
    }

    /// Mean RMSE over replications per test bias rate, in grid order.
    pub fn mean_rmse_by_rate(&self, method: MethodName, grid: &[f64]) -> Vec<f64> {
        grid.iter()
            .map(|&r| {
                let v: Vec<f64> = self
                    .rate_rows
                    .iter()
                    .filter(|row| row.method == method && row.r_test == r)
                    .map(|row| row.rmse)
                    .collect();
                mean(&v)
            })
            .collect()
    }

    /// Writes `results.csv`, `rmse_by_rate.csv`, `summary.csv` and
    /// `failures.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        write_rows(&dir.join("results.csv"), &self.rows)?;
        write_rows(&dir.join("rmse_by_rate.csv"), &self.rate_rows)?;
        write_rows(&dir.join("summary.csv"), &self.summary)?;
        write_rows(&dir.join("failures.csv"), &self.failures)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep each replication's training data and DWR weights.
    pub keep_details: bool,
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResults> {
    run_scenario_with(cfg, RunOptions::default())
}

struct Replication {
    rows: Vec<ResultRow>,
    rate_rows: Vec<RateRow>,
    failures: Vec<CellFailure>,
    detail: Option<ReplicationDetail>,
}

pub fn run_scenario_with(cfg: &ScenarioConfig, opts: RunOptions) -> Result<ScenarioResults> {
    cfg.validate()?;
    let test_sets = test_environments(cfg)?;
    run_on_test_sets(cfg, &test_sets, opts)
}

/// Runs the replications against precomputed test environments, which
/// must come from [`test_environments`] for the same design and grid.
pub(crate) fn run_on_test_sets(
    cfg: &ScenarioConfig,
    test_sets: &[Vec<Dataset>],
    opts: RunOptions,
) -> Result<ScenarioResults> {
    let design = cfg.design();
    let space = SearchSpace {
        hyper_grid: cfg.hyper_grid.clone(),
        dwr_grid: cfg.dwr_grid.clone(),
        dwr: cfg.dwr.clone(),
        lasso_includes_ols: false,
    };

    let reps: Vec<Replication> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let seed = seeds::training(cfg.base_seed, rep);
            let env = cfg.environment(cfg.r_train, cfg.n);
            let data = select_environment(&design, &env, seed).and_then(|train| {
                let val = (0..cfg.validation_sets)
                    .map(|k| select_environment(&design, &env, seeds::validation(cfg.base_seed, rep, k)))
                    .collect::<dwr_core::Result<Vec<_>>>()?;
                Ok((train, val))
            });
            let (train, validation) = match data {
                Ok(d) => d,
                Err(e) => {
                    return Replication {
                        rows: vec![],
                        rate_rows: vec![],
                        failures: cfg
                            .methods
                            .iter()
                            .map(|&method| CellFailure {
                                method,
                                replication: rep,
                                seed,
                                message: format!("environment generation: {e}"),
                            })
                            .collect(),
                        detail: None,
                    }
                }
            };
            run_replication(cfg, &space, test_sets, rep, seed, train, &validation, opts)
        })
        .collect();

    let mut out = ScenarioResults {
        rows: vec![],
        rate_rows: vec![],
        failures: vec![],
        summary: vec![],
        details: vec![],
    };
    for r in reps {
        out.rows.extend(r.rows);
        out.rate_rows.extend(r.rate_rows);
        out.failures.extend(r.failures);
        out.details.extend(r.detail);
    }
    let cells = cfg.replications * cfg.methods.len();
    if cells > 0 && out.failures.len() as f64 > MAX_FAILURE_RATE * cells as f64 {
        return Err(HarnessError::Numerical(format!(
            "{} of {cells} fits failed; first: {}",
            out.failures.len(),
            out.failures[0].message
        )));
    }
    out.summary = cfg
        .methods
        .iter()
        .filter_map(|&m| summarize(m, &out.rows))
        .collect();
    Ok(out)
}

/// Test environments for every bias rate of the grid, `[rate][k]`.
pub(crate) fn test_environments(cfg: &ScenarioConfig) -> Result<Vec<Vec<Dataset>>> {
    let design = cfg.design();
    let k = cfg.test_sets_per_rate;
    let flat: Vec<Dataset> = (0..cfg.r_test_grid.len() * k)
        .into_par_iter()
        .map(|idx| {
            let (rate, j) = (idx / k, idx % k);
            let env = cfg.environment(cfg.r_test_grid[rate], cfg.test_n());
            select_environment(&design, &env, seeds::test(cfg.base_seed, rate, j))
        })
        .collect::<dwr_core::Result<_>>()?;
    let mut it = flat.into_iter();
    Ok((0..cfg.r_test_grid.len())
        .map(|_| it.by_ref().take(k).collect())
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn run_replication(
    cfg: &ScenarioConfig,
    space: &SearchSpace,
    test_sets: &[Vec<Dataset>],
    rep: usize,
    seed: u64,
    train: Dataset,
    validation: &[Dataset],
    opts: RunOptions,
) -> Replication {
    let mut out = Replication {
        rows: vec![],
        rate_rows: vec![],
        failures: vec![],
        detail: None,
    };
    let mut dwr_weights = None;
    for &method in &cfg.methods {
        let scored = select_and_fit(method, &train, validation, space, seed)
            .and_then(|model| score(cfg, &train, test_sets, &model).map(|s| (model, s)));
        match scored {
            Ok((model, (row, per_rate))) => {
                if method == MethodName::Dwr {
                    dwr_weights = model.weights.clone();
                }
                out.rows.push(ResultRow { seed, ..row });
                out.rate_rows.extend(cfg.r_test_grid.iter().zip(per_rate).map(|(&r_test, rmse)| RateRow {
                    method,
                    replication: rep,
                    seed,
                    r_test,
                    rmse,
                }));
            }
            Err(e) => out.failures.push(CellFailure {
                method,
                replication: rep,
                seed,
                message: e.to_string(),
            }),
        }
    }
    if opts.keep_details {
        out.detail = Some(ReplicationDetail {
            replication: rep,
            seed,
            train,
            dwr_weights,
        });
    }
    out
}

fn score(
    cfg: &ScenarioConfig,
    train: &Dataset,
    test_sets: &[Vec<Dataset>],
    model: &FittedModel,
) -> Result<(ResultRow, Vec<f64>)> {
    let truth = train.truth().ok_or(dwr_core::Error::MissingGroundTruth)?;
    let beta = model.beta.as_slice();
    let beta_s_error = beta_error(beta, &truth.beta_true, &truth.stable_cols)?;
    let beta_v_error = beta_error(beta, &truth.beta_true, &truth.unstable_cols)?;
    let mut per_rate = Vec::with_capacity(test_sets.len());
    for sets in test_sets {
        let rmses = sets.iter().map(|t| model.rmse(t)).collect::<Result<Vec<_>>>()?;
        per_rate.push(mean(&rmses));
    }
    let (average_error, stability_error) = stability_metrics(&per_rate)?;
    Ok((
        ResultRow {
            method: model.method,
            n: cfg.n,
            p: cfg.p,
            r_train: cfg.r_train,
            beta_s_error,
            beta_v_error,
            average_error,
            stability_error,
            seed: 0,
        },
        per_rate,
    ))
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance; zero for a single value.
pub(crate) fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

fn summarize(method: MethodName, rows: &[ResultRow]) -> Option<MethodSummary> {
    let mine: Vec<&ResultRow> = rows.iter().filter(|r| r.method == method).collect();
    if mine.is_empty() {
        return None;
    }
    let col = |f: fn(&ResultRow) -> f64| -> (f64, f64) {
        let v: Vec<f64> = mine.iter().map(|r| f(r)).collect();
        (mean(&v), variance(&v))
    };
    let (bs, bs_v) = col(|r| r.beta_s_error);
    let (bv, bv_v) = col(|r| r.beta_v_error);
    let (a, a_v) = col(|r| r.average_error);
    let (s, s_v) = col(|r| r.stability_error);
    Some(MethodSummary {
        method,
        replications: mine.len(),
        beta_s_error_mean: bs,
        beta_s_error_var: bs_v,
        beta_v_error_mean: bv,
        beta_v_error_var: bv_v,
        average_error_mean: a,
        average_error_var: a_v,
        stability_error_mean: s,
        stability_error_var: s_v,
    })
}
