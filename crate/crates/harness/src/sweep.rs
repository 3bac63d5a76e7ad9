//! One-parameter sweeps of the DWR penalties.

use serde::{Deserialize, Serialize};

use crate::config::{MethodName, ScenarioConfig};
use crate::error::{HarnessError, Result};
use crate::scenario::{run_on_test_sets, test_environments, RunOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Lambda1,
    Lambda2,
    Lambda3,
    Lambda4,
}

impl SweepParam {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lambda1" => Some(SweepParam::Lambda1),
            "lambda2" => Some(SweepParam::Lambda2),
            "lambda3" => Some(SweepParam::Lambda3),
            "lambda4" => Some(SweepParam::Lambda4),
            _ => None,
        }
    }
}

/// DWR metrics averaged over replications at one value of the swept
/// penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub average_error: f64,
    pub stability_error: f64,
    pub beta_s_error: f64,
    pub beta_v_error: f64,
}

/// Runs the scenario with DWR only, fixing `param` to each of `values` and
/// the other penalties to the first entry of their grid. Every value is
/// scored on the same training, validation and test environments.
pub fn sweep_lambda(cfg: &ScenarioConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(HarnessError::Config("sweep needs at least one value".into()));
    }
    let mut base = cfg.clone();
    base.methods = vec![MethodName::Dwr];
    let g = &mut base.dwr_grid;
    g.lambda1.truncate(1);
    g.lambda2.truncate(1);
    g.lambda3.truncate(1);
    g.lambda4.truncate(1);
    base.validate()?;
    let test_sets = test_environments(&base)?;

    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut c = base.clone();
        let slot = match param {
            SweepParam::Lambda1 => &mut c.dwr_grid.lambda1,
            SweepParam::Lambda2 => &mut c.dwr_grid.lambda2,
            SweepParam::Lambda3 => &mut c.dwr_grid.lambda3,
            SweepParam::Lambda4 => &mut c.dwr_grid.lambda4,
        };
        *slot = vec![value];
        c.validate()?;
        let res = run_on_test_sets(&c, &test_sets, RunOptions::default())?;
        let s = res.summary_for(MethodName::Dwr).ok_or_else(|| {
            HarnessError::Numerical(format!("every DWR fit failed at {param:?} = {value}"))
        })?;
        rows.push(SweepRow {
            param,
            value,
            average_error: s.average_error_mean,
            stability_error: s.stability_error_mean,
            beta_s_error: s.beta_s_error_mean,
            beta_v_error: s.beta_v_error_mean,
        });
    }
    Ok(rows)
}

/// Swept value with the lowest mean stability error.
pub fn argmin_stability(rows: &[SweepRow]) -> Option<f64> {
    rows.iter()
        .min_by(|a, b| a.stability_error.total_cmp(&b.stability_error))
        .map(|r| r.value)
}
