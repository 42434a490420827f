use std::fs;
use std::path::{Path, PathBuf};

use vqc::data::{self, Dataset};
use vqc::experiment::{self, is_collapsed, ExperimentConfig, ModelName};

fn dataset_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/titanic3.csv")
}

fn config(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        dataset_path: dataset_path(),
        output_dir: out.to_path_buf(),
        max_iterations: 10,
        ..ExperimentConfig::default()
    }
}

#[test]
fn degenerate_split_is_flagged_as_collapsed() {
    let data = Dataset::from_scaled(
        vec![vec![0.25; 5]; 50],
        (0..50).map(|i| u8::from(i % 3 == 0)).collect(),
    )
    .unwrap();
    let (train, test) = data::split(&data, 0.9, 5).unwrap();
    let cell = experiment::fit_and_evaluate(&config(Path::new(".")), ModelName::Svc, &train, &test, 0).unwrap();
    assert!(is_collapsed(&cell.test), "{:?}", cell.test);
}

#[test]
fn svc_run_writes_empty_loss_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        model: ModelName::Svc,
        ..config(dir.path())
    };
    let record = experiment::cmd_train(&cfg).unwrap();
    assert!(record.train_report.is_none());
    assert_eq!(
        fs::read_to_string(dir.path().join("loss_curve.csv")).unwrap(),
        "iteration,loss\n"
    );
    let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3);
    assert!(record.test.acc > 0.7);
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        model: "ZZ15".parse().unwrap(),
        seed: 5,
        ..config(&dir.path().join("first"))
    };
    experiment::cmd_train(&cfg).unwrap();
    let mut again = ExperimentConfig::from_file(dir.path().join("first/config.txt")).unwrap();
    assert_eq!(again, cfg);
    again.output_dir = dir.path().join("second");
    experiment::cmd_train(&again).unwrap();
    for f in ["metrics.csv", "loss_curve.csv", "model.txt"] {
        assert_eq!(
            fs::read(dir.path().join("first").join(f)).unwrap(),
            fs::read(dir.path().join("second").join(f)).unwrap()
        );
    }
}

#[test]
fn repeat_with_one_run_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let rows = experiment::cmd_repeat(&config(dir.path())).unwrap();
    assert_eq!(rows.len(), 1);
    let table = fs::read_to_string(dir.path().join("repeat.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("run,train_seed,acc,bacc,j"));
    assert_eq!(table.lines().count(), 2);
}

#[test]
fn small_sweep_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        sweep_models: vec!["Z10".parse().unwrap(), ModelName::Svc],
        sweep_fractions: vec![0.3, 0.9],
        collapse_seeds: 3,
        ..config(dir.path())
    };
    let out = experiment::cmd_sweep(&cfg).unwrap();
    assert_eq!(out.cells.len(), 4);
    assert_eq!(out.svc_collapse.len(), 3);
    let table = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let header = table.lines().next().unwrap();
    assert!(header.ends_with("acc,bacc,j,collapsed"), "{header}");
    let cols = header.split(',').count();
    assert!(table.lines().all(|l| l.split(',').count() == cols));
    assert!(table.lines().nth(1).unwrap().starts_with("Z10,0.3,0,392,917,"));
}

#[test]
fn failures_leave_no_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        dataset_path: dir.path().join("missing.csv"),
        ..config(dir.path())
    };
    assert!(experiment::cmd_grid(&cfg).is_err());
    assert!(experiment::cmd_train(&cfg).is_err());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}
