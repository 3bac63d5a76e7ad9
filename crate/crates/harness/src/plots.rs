//! Plot-ready CSV files and simple SVG renderings of them.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::MethodName;
use crate::error::{HarnessError, Result};
use crate::output::{write_rows, HeaderOnly};
use crate::real::RealResults;
use crate::scenario::{variance, ScenarioResults};
use crate::sweep::SweepRow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseCurveRow {
    pub method: MethodName,
    pub r_test: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBarRow {
    pub method: MethodName,
    pub average_error: f64,
    pub average_error_sd: f64,
    pub stability_error: f64,
    pub stability_error_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub method: MethodName,
    pub distance: f64,
    pub rmse: f64,
}

impl HeaderOnly for RmseCurveRow {
    fn header() -> &'static [&'static str] {
        &["method", "r_test", "rmse"]
    }
}

impl HeaderOnly for ErrorBarRow {
    fn header() -> &'static [&'static str] {
        &["method", "average_error", "average_error_sd", "stability_error", "stability_error_sd"]
    }
}

impl HeaderOnly for DistanceRow {
    fn header() -> &'static [&'static str] {
        &["method", "distance", "rmse"]
    }
}

impl HeaderOnly for SweepRow {
    fn header() -> &'static [&'static str] {
        &["param", "value", "average_error", "stability_error", "beta_s_error", "beta_v_error"]
    }
}

/// Mean RMSE over replications per method and test bias rate, one row per
/// grid value for every method in `methods`.
pub fn rmse_curves(res: &ScenarioResults, methods: &[MethodName], grid: &[f64]) -> Vec<RmseCurveRow> {
    methods
        .iter()
        .flat_map(|&m| {
            grid.iter()
                .zip(res.mean_rmse_by_rate(m, grid))
                .map(move |(&r_test, rmse)| RmseCurveRow { method: m, r_test, rmse })
        })
        .collect()
}

pub fn error_bars(res: &ScenarioResults, methods: &[MethodName]) -> Vec<ErrorBarRow> {
    methods
        .iter()
        .map(|&m| {
            let avg: Vec<f64> = res.rows.iter().filter(|r| r.method == m).map(|r| r.average_error).collect();
            let stab: Vec<f64> = res.rows.iter().filter(|r| r.method == m).map(|r| r.stability_error).collect();
            ErrorBarRow {
                method: m,
                average_error: crate::scenario::mean(&avg),
                average_error_sd: variance(&avg).sqrt(),
                stability_error: crate::scenario::mean(&stab),
                stability_error_sd: variance(&stab).sqrt(),
            }
        })
        .collect()
}

/// Writes `rmse_vs_rtest.csv`/`.svg` and `errors_by_method.csv` for a
/// scenario run.
pub fn emit_scenario_plots(
    res: &ScenarioResults,
    methods: &[MethodName],
    grid: &[f64],
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let curves = rmse_curves(res, methods, grid);
    write_rows(&dir.join("rmse_vs_rtest.csv"), &curves)?;
    write_rows(&dir.join("errors_by_method.csv"), &error_bars(res, methods))?;
    let series: Vec<Series> = methods
        .iter()
        .map(|&m| Series {
            label: m.to_string(),
            points: curves.iter().filter(|c| c.method == m).map(|c| (c.r_test, c.rmse)).collect(),
        })
        .collect();
    write_svg(&dir.join("rmse_vs_rtest.svg"), "r_test", "RMSE", &series, false)
}

/// Writes `lambda_sweep.csv`/`.svg`.
pub fn emit_sweep_plots(rows: &[SweepRow], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    write_rows(&dir.join("lambda_sweep.csv"), rows)?;
    let series = vec![
        Series {
            label: "Average_Error".into(),
            points: rows.iter().map(|r| (r.value, r.average_error)).collect(),
        },
        Series {
            label: "Stability_Error".into(),
            points: rows.iter().map(|r| (r.value, r.stability_error)).collect(),
        },
    ];
    let x_label = rows.first().map_or("value".to_string(), |r| format!("{:?}", r.param).to_lowercase());
    write_svg(&dir.join("lambda_sweep.svg"), &x_label, "error", &series, true)
}

/// Writes `rmse_vs_distance.csv`/`.svg` for a real-data run.
pub fn emit_real_plots(res: &RealResults, methods: &[MethodName], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let rows: Vec<DistanceRow> = res
        .rows
        .iter()
        .filter(|r| methods.contains(&r.method))
        .map(|r| DistanceRow {
            method: r.method,
            distance: r.distance,
            rmse: r.rmse,
        })
        .collect();
    write_rows(&dir.join("rmse_vs_distance.csv"), &rows)?;
    let series: Vec<Series> = methods
        .iter()
        .map(|&m| Series {
            label: m.to_string(),
            points: rows.iter().filter(|r| r.method == m).map(|r| (r.distance, r.rmse)).collect(),
        })
        .collect();
    write_svg(&dir.join("rmse_vs_distance.svg"), "distance", "RMSE", &series, false)
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

fn write_svg(path: &Path, x_label: &str, y_label: &str, series: &[Series], log_x: bool) -> Result<()> {
    let tx = |x: f64| if log_x { x.max(f64::MIN_POSITIVE).log10() } else { x };
    let pts = || series.iter().flat_map(|s| s.points.iter()).filter(|(_, y)| y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts() {
        x0 = x0.min(tx(x));
        x1 = x1.max(tx(x));
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let (w, h, m) = (640.0, 400.0, 60.0);
    let sx = |x: f64| m + (tx(x) - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{m} {m} V{} H{}" fill="none" stroke="black"/>"#,
        h - m,
        w - m
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, w / 2.0, h - 15.0);
    let _ = writeln!(svg, r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">{y_label}</text>"#, h / 2.0, h / 2.0);
    for (v, anchor) in [(y0, h - m), (y1, m)] {
        let _ = writeln!(svg, r#"<text x="{}" y="{anchor}" text-anchor="end">{v:.3}</text>"#, m - 5.0);
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let d: Vec<String> = s
            .points
            .iter()
            .filter(|(_, y)| y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, d.join(" "));
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            w - m + 5.0,
            m + 15.0 * i as f64,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg).map_err(|e| HarnessError::io(path, e))
}
