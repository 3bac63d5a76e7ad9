use dwr_core::io::{read_dataset_csv, read_dataset_with_metadata, write_dataset_csv, DatasetMetadata};
use dwr_core::synthetic::{select_environment, EnvironmentSpec, GraphKind, OutcomeSpec, SyntheticDesign};

#[test]
fn synthetic_dataset_round_trips_through_files() {
    let design = SyntheticDesign::new(GraphKind::StoV, 10, OutcomeSpec::default());
    let env = EnvironmentSpec::new(-2.0, 300);
    let ds = select_environment(&design, &env, 77).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("env.csv");
    let json = dir.path().join("env.json");
    write_dataset_csv(&ds, &csv).unwrap();
    let meta = DatasetMetadata {
        graph: design.graph,
        outcome: design.outcome,
        environment: Some(env),
        seed: 77,
        n: ds.n(),
        p: ds.p(),
        truth: ds.truth().unwrap().clone(),
    };
    meta.write_json(&json).unwrap();

    let plain = read_dataset_csv(&csv).unwrap();
    assert_eq!(plain.x(), ds.x());
    assert_eq!(plain.y(), ds.y());
    assert!(plain.truth().is_none());

    let (back, meta_back) = read_dataset_with_metadata(&csv, &json).unwrap();
    assert_eq!(back, ds);
    assert_eq!(meta_back, meta);
    let text = std::fs::read_to_string(&json).unwrap();
    for key in ["\"graph\"", "\"seed\"", "\"biased_cols\"", "\"beta_true\"", "\"stable_cols\""] {
        assert!(text.contains(key), "{key}");
    }
}

#[test]
fn metadata_must_match_the_table() {
    let design = SyntheticDesign::new(GraphKind::SIndepV, 6, OutcomeSpec::default());
    let a = design.sample(20, 1).unwrap();
    let b = design.sample(25, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("a.csv");
    let json = dir.path().join("b.json");
    write_dataset_csv(&a, &csv).unwrap();
    DatasetMetadata {
        graph: design.graph,
        outcome: design.outcome,
        environment: None,
        seed: 1,
        n: b.n(),
        p: b.p(),
        truth: b.truth().unwrap().clone(),
    }
    .write_json(&json)
    .unwrap();
    assert!(read_dataset_with_metadata(&csv, &json).is_err());
}
