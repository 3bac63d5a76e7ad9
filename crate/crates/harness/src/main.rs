use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dwr_core::baselines::{BaselineKind, BaselineSpec};
use dwr_core::io::{read_dataset_csv, read_dataset_with_metadata, write_dataset_csv, DatasetMetadata};
use dwr_core::metrics::{beta_error, max_off_diagonal, omitted_variable_diagnostics, pearson_matrix, stability_metrics};
use dwr_core::synthetic::{select_environment, EnvironmentSpec, GraphKind, OutcomeForm, OutcomeSpec, SyntheticDesign};
use dwr_core::{Dataset, HyperParams, WeightVector};
use dwr_harness::config::{load_json, MethodName, RealDataConfig, ScenarioConfig};
use dwr_harness::methods::{fit_candidate, Candidate, FittedModel};
use dwr_harness::plots::{emit_real_plots, emit_scenario_plots, emit_sweep_plots};
use dwr_harness::{run_real, run_scenario, sweep_lambda, HarnessError, Result, SweepParam};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "dwr", version, about = "Decorrelated weighting regression experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Graph {
    SIndepV,
    StoV,
    VtoS,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Poly,
    Exp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Ols,
    Lasso,
    Ridge,
    Iilasso,
    Dwr,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic dataset CSV and its JSON metadata sidecar.
    Gen {
        #[arg(long, value_enum, default_value = "s-indep-v")]
        graph: Graph,
        #[arg(long, value_enum, default_value = "poly")]
        outcome: Form,
        #[arg(long, default_value_t = 0.3)]
        noise_sd: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        /// Bias rate of the selected environment; omit for an unselected sample.
        #[arg(long, allow_hyphen_values = true)]
        r: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        vb_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV; the sidecar is written next to it with a .json extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one method on one dataset and save the fit as JSON.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        lambda1: Option<f64>,
        #[arg(long)]
        lambda2: Option<f64>,
        #[arg(long)]
        lambda3: Option<f64>,
        #[arg(long)]
        lambda4: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a saved fit on test datasets.
    Eval {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        data: Vec<PathBuf>,
    },
    /// Run a synthetic scenario from a JSON config.
    Scenario {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a real-data experiment from a JSON config.
    Real {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep one DWR penalty over a list of values.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "lambda2")]
        param: String,
        /// Defaults to the config's hyper_grid.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write unweighted and DWR-weighted Pearson correlation matrices.
    Corr {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A saved fit together with the file it was trained on.
#[derive(Serialize, Deserialize)]
struct FitRecord {
    train_csv: PathBuf,
    model: FittedModel,
}

fn sidecar(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    let side = sidecar(path);
    let loaded = if side.exists() {
        read_dataset_with_metadata(path, &side).map(|(ds, _)| ds)
    } else {
        read_dataset_csv(path)
    };
    loaded.map_err(|e| HarnessError::ingestion(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Numerical(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}

fn write_matrix(path: &Path, names: &[String], m: &DMatrix<f64>) -> Result<()> {
    let err = |e: csv::Error| HarnessError::Numerical(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    let mut header = vec![String::new()];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(err)?;
    for (i, name) in names.iter().enumerate() {
        let mut rec = vec![name.clone()];
        rec.extend(m.row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

#[allow(clippy::too_many_arguments)]
fn gen(
    graph: Graph,
    form: Form,
    noise_sd: f64,
    n: usize,
    p: usize,
    r: Option<f64>,
    vb_fraction: f64,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let graph = match graph {
        Graph::SIndepV => GraphKind::SIndepV,
        Graph::StoV => GraphKind::StoV,
        Graph::VtoS => GraphKind::VtoS,
    };
    let form = match form {
        Form::Poly => OutcomeForm::Poly,
        Form::Exp => OutcomeForm::Exp,
    };
    let outcome = OutcomeSpec { form, noise_sd };
    let design = SyntheticDesign::new(graph, p, outcome);
    let environment = r.map(|bias_rate| EnvironmentSpec {
        bias_rate,
        vb_fraction,
        target_n: n,
    });
    let ds = match &environment {
        Some(env) => select_environment(&design, env, seed)?,
        None => design.sample(n, seed)?,
    };
    write_dataset_csv(&ds, out).map_err(|e| HarnessError::ingestion(out, e))?;
    let meta = DatasetMetadata {
        graph,
        outcome,
        environment,
        seed,
        n,
        p,
        truth: ds.truth().cloned().ok_or(dwr_core::Error::MissingGroundTruth)?,
    };
    let side = sidecar(out);
    meta.write_json(&side).map_err(|e| HarnessError::ingestion(&side, e))?;
    println!("wrote {} ({n} x {p}) and {}", out.display(), side.display());
    Ok(())
}

fn weight_summary(w: &WeightVector) -> String {
    let s = w.as_slice();
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    format!(
        "weights: mean {:.4}, min {:.4}, max {:.4}, effective sample size {:.1}",
        w.mean(),
        min,
        max,
        w.effective_sample_size()
    )
}

#[allow(clippy::too_many_arguments)]
fn fit(
    data: &Path,
    method: Method,
    l1: Option<f64>,
    l2: Option<f64>,
    l3: Option<f64>,
    l4: Option<f64>,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let ds = load_dataset(data)?;
    let (name, candidate) = match method {
        Method::Ols => (MethodName::Ols, Candidate::Baseline(BaselineSpec::ols())),
        Method::Lasso => (
            MethodName::Lasso,
            Candidate::Baseline(BaselineSpec::new(BaselineKind::Lasso, l1.unwrap_or(0.1), 0.0)),
        ),
        Method::Ridge => (
            MethodName::Ridge,
            Candidate::Baseline(BaselineSpec::new(BaselineKind::Ridge, l1.unwrap_or(0.1), 0.0)),
        ),
        Method::Iilasso => (
            MethodName::IiLasso,
            Candidate::Baseline(BaselineSpec::new(
                BaselineKind::IiLasso,
                l1.unwrap_or(0.1),
                l2.unwrap_or(0.1),
            )),
        ),
        Method::Dwr => {
            let d = HyperParams::default();
            let hp = HyperParams {
                lambda1: l1.unwrap_or(d.lambda1),
                lambda2: l2.unwrap_or(d.lambda2),
                lambda3: l3.unwrap_or(d.lambda3),
                lambda4: l4.unwrap_or(d.lambda4),
                ..d
            };
            hp.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
            (MethodName::Dwr, Candidate::Dwr(hp))
        }
    };
    let model = fit_candidate(name, &ds, &candidate, seed)?;
    println!("{name} on {} (n = {}, p = {})", data.display(), ds.n(), ds.p());
    for (feature, b) in ds.feature_names().iter().zip(model.beta.iter()) {
        println!("  {feature:>8} {b:+.6}");
    }
    if let Some(w) = &model.weights {
        println!("{}", weight_summary(w));
        if !model.converged {
            println!("warning: stopped at the iteration limit before converging");
        }
    }
    println!("training RMSE {:.6}", model.rmse(&ds)?);
    if let Some(out) = out {
        let record = FitRecord {
            train_csv: data.to_path_buf(),
            model,
        };
        write_json(out, &record)?;
        println!("saved {}", out.display());
    }
    Ok(())
}

fn eval(fit: &Path, data: &[PathBuf]) -> Result<()> {
    let record: FitRecord = load_json(fit)?;
    let model = &record.model;
    let mut rmses = Vec::with_capacity(data.len());
    println!("file,rmse");
    for path in data {
        let ds = load_dataset(path)?;
        let e = model.rmse(&ds)?;
        println!("{},{e}", path.display());
        rmses.push(e);
    }
    let (avg, stab) = stability_metrics(&rmses)?;
    println!("average_error {avg}");
    println!("stability_error {stab}");
    let side = sidecar(&record.train_csv);
    if side.exists() {
        let meta = DatasetMetadata::read_json(&side).map_err(|e| HarnessError::ingestion(&side, e))?;
        let t = &meta.truth;
        let b = model.beta.as_slice();
        println!("beta_s_error {}", beta_error(b, &t.beta_true, &t.stable_cols)?);
        println!("beta_v_error {}", beta_error(b, &t.beta_true, &t.unstable_cols)?);
    }
    Ok(())
}

fn corr(data: &Path, seed: u64, out: &Path) -> Result<()> {
    let ds = load_dataset(data)?;
    let (centered, _) = ds.centered();
    let hp = HyperParams {
        seed,
        ..HyperParams::default()
    };
    let fit = dwr_core::dwr_fit(&centered, &hp)?;
    let w = fit.weights;
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let uni = pearson_matrix(ds.x(), None)?;
    let wei = pearson_matrix(ds.x(), Some(&w))?;
    write_matrix(&out.join("corr_unweighted.csv"), ds.feature_names(), &uni)?;
    write_matrix(&out.join("corr_weighted.csv"), ds.feature_names(), &wei)?;
    println!("max off-diagonal |corr|: unweighted {:.4}, weighted {:.4}", max_off_diagonal(&uni), max_off_diagonal(&wei));
    println!("{}", weight_summary(&w));
    if ds.truth().is_some() {
        let u = omitted_variable_diagnostics(&centered, None)?;
        let d = omitted_variable_diagnostics(&centered, Some(&w))?;
        let t = ds.truth().expect("checked above");
        for (k, &col) in t.unstable_cols.iter().enumerate() {
            println!(
                "  {:>8} mean V*g: unweighted {:+.4}, weighted {:+.4}",
                ds.feature_names()[col],
                u.cross_vg[k],
                d.cross_vg[k]
            );
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Gen {
            graph,
            outcome,
            noise_sd,
            n,
            p,
            r,
            vb_fraction,
            seed,
            out,
        } => gen(graph, outcome, noise_sd, n, p, r, vb_fraction, seed, &out),
        Cmd::Fit {
            data,
            method,
            lambda1,
            lambda2,
            lambda3,
            lambda4,
            seed,
            out,
        } => fit(&data, method, lambda1, lambda2, lambda3, lambda4, seed, out.as_deref()),
        Cmd::Eval { fit, data } => eval(&fit, &data),
        Cmd::Scenario { config, out } => {
            let cfg: ScenarioConfig = load_json(&config)?;
            let res = run_scenario(&cfg)?;
            res.write(&out)?;
            emit_scenario_plots(&res, &cfg.methods, &cfg.r_test_grid, &out)?;
            for s in &res.summary {
                println!(
                    "{:>8}  beta_s {:.3}  beta_v {:.3}  average {:.3}  stability {:.4}",
                    s.method.as_str(),
                    s.beta_s_error_mean,
                    s.beta_v_error_mean,
                    s.average_error_mean,
                    s.stability_error_mean
                );
            }
            if !res.failures.is_empty() {
                eprintln!("{} fits failed; see failures.csv", res.failures.len());
            }
            Ok(())
        }
        Cmd::Real { config, out } => {
            let cfg: RealDataConfig = load_json(&config)?;
            let res = run_real(&cfg)?;
            res.write(&out)?;
            emit_real_plots(&res, &cfg.methods, &out)?;
            for s in &res.summary {
                println!(
                    "{:>8}  average {:.4}  stability {:.4}",
                    s.method.as_str(),
                    s.average_error,
                    s.stability_error
                );
            }
            Ok(())
        }
        Cmd::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let cfg: ScenarioConfig = load_json(&config)?;
            let param = SweepParam::parse(&param)
                .ok_or_else(|| HarnessError::Config(format!("unknown parameter {param}")))?;
            let values = if values.is_empty() { cfg.hyper_grid.clone() } else { values };
            let rows = sweep_lambda(&cfg, param, &values)?;
            emit_sweep_plots(&rows, &out)?;
            for r in &rows {
                println!("{:>10}  average {:.4}  stability {:.4}", r.value, r.average_error, r.stability_error);
            }
            Ok(())
        }
        Cmd::Corr { data, seed, out } => corr(&data, seed, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
