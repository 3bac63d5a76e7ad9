use std::path::PathBuf;

use dwr_core::io::write_dataset_csv;
use dwr_core::synthetic::{select_environment, EnvironmentSpec, GraphKind, OutcomeSpec, SyntheticDesign};
use dwr_core::Dataset;
use dwr_harness::config::default_hyper_grid;
use dwr_harness::real::{load_real, RealData};
use dwr_harness::{run_real, run_real_data, DwrGrid, HarnessError, MethodName, RealDataConfig};

fn env(r: f64, seed: u64) -> Dataset {
    let design = SyntheticDesign::new(GraphKind::SIndepV, 6, OutcomeSpec::default());
    select_environment(&design, &EnvironmentSpec::new(r, 300), seed).unwrap()
}

fn config(dir: &std::path::Path, tests: &[&str]) -> RealDataConfig {
    let hp = dwr_core::HyperParams {
        max_iters: 300,
        ..Default::default()
    };
    RealDataConfig {
        train_csv: dir.join("train.csv"),
        validation_csvs: vec![dir.join("val.csv")],
        test_csvs: tests.iter().map(|t| dir.join(t)).collect(),
        outcome_column: "Y".into(),
        feature_columns: vec![],
        methods: MethodName::ALL.to_vec(),
        hyper_grid: default_hyper_grid(),
        lasso_includes_ols: true,
        dwr_grid: DwrGrid::default(),
        dwr: hp,
    }
}

fn write_envs(dir: &std::path::Path) -> RealData {
    let train = env(1.7, 1);
    let validation = vec![env(1.7, 2)];
    let tests: Vec<(String, Dataset)> = [(-2.0, 3), (-1.5, 4), (2.5, 5)]
        .iter()
        .enumerate()
        .map(|(k, &(r, s))| (dir.join(format!("test{k}.csv")).display().to_string(), env(r, s)))
        .collect();
    write_dataset_csv(&train, dir.join("train.csv")).unwrap();
    write_dataset_csv(&validation[0], dir.join("val.csv")).unwrap();
    for (path, ds) in &tests {
        write_dataset_csv(ds, path).unwrap();
    }
    RealData {
        train,
        validation,
        tests,
    }
}

#[test]
fn csv_round_trip_matches_in_memory_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_envs(dir.path());
    let cfg = config(dir.path(), &["test0.csv", "test1.csv", "test2.csv"]);
    let from_files = run_real(&cfg).unwrap();
    let in_memory = run_real_data(&cfg, &data).unwrap();
    assert_eq!(from_files.rows.len(), in_memory.rows.len());
    for (a, b) in from_files.rows.iter().zip(&in_memory.rows) {
        assert_eq!((a.method, &a.test_file), (b.method, &b.test_file));
        assert!((a.rmse - b.rmse).abs() <= 1e-12);
        assert!((a.distance - b.distance).abs() <= 1e-12);
    }
    for (a, b) in from_files.summary.iter().zip(&in_memory.summary) {
        assert!((a.stability_error - b.stability_error).abs() <= 1e-12);
    }
}

#[test]
fn training_file_as_test_file() {
    let dir = tempfile::tempdir().unwrap();
    write_envs(dir.path());
    let cfg = config(dir.path(), &["train.csv", "test0.csv"]);
    let res = run_real(&cfg).unwrap();
    for s in &res.summary {
        let own: Vec<_> = res
            .rows
            .iter()
            .filter(|r| r.method == s.method && r.test_file.ends_with("train.csv"))
            .collect();
        assert_eq!(own.len(), 1);
        assert_eq!(own[0].distance, 0.0);
        assert_eq!(own[0].rmse, s.train_rmse);
    }
}

#[test]
fn rows_are_sorted_by_distance() {
    let dir = tempfile::tempdir().unwrap();
    write_envs(dir.path());
    let res = run_real(&config(dir.path(), &["test2.csv", "test0.csv", "train.csv", "test1.csv"])).unwrap();
    assert!(res.rows.windows(2).all(|w| w[0].distance <= w[1].distance));
    assert_eq!(res.rows[0].distance, 0.0);
}

#[test]
fn schema_mismatch_names_file_and_column() {
    let dir = tempfile::tempdir().unwrap();
    write_envs(dir.path());
    let bad: PathBuf = dir.path().join("bad.csv");
    let text = std::fs::read_to_string(dir.path().join("test1.csv")).unwrap();
    std::fs::write(&bad, text.replacen("X3", "NO2", 1)).unwrap();
    let cfg = config(dir.path(), &["test0.csv", "bad.csv"]);
    let err = load_real(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    let msg = err.to_string();
    assert!(msg.contains("bad.csv") && msg.contains("X3"), "{msg}");
    assert!(matches!(err, HarnessError::Ingestion { .. }));
}

#[test]
fn unparsable_value_names_file_and_column() {
    let dir = tempfile::tempdir().unwrap();
    write_envs(dir.path());
    let bad = dir.path().join("bad.csv");
    let mut lines: Vec<String> = std::fs::read_to_string(dir.path().join("test1.csv"))
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    let mut cells: Vec<&str> = lines[2].split(',').collect();
    cells[1] = "n/a";
    lines[2] = cells.join(",");
    std::fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let err = load_real(&config(dir.path(), &["test0.csv", "bad.csv"])).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("bad.csv") && msg.contains("X2") && msg.contains("row 2"), "{msg}");
}
