use std::path::{Path, PathBuf};
use std::process::Command;

fn dataset() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/titanic3.csv")
}

fn vqc() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vqc"));
    cmd.env("VQC_THREADS", "2");
    cmd
}

#[test]
fn preprocess_prints_histogram_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("clean.csv");
    let run = || {
        let o = vqc()
            .args(["preprocess", "--input"])
            .arg(dataset())
            .arg("--output")
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (String::from_utf8(o.stdout).unwrap(), std::fs::read(&out).unwrap())
    };
    let (stdout, first) = run();
    assert!(stdout.contains("survived: 500, perished: 809"), "{stdout}");
    let (_, second) = run();
    assert_eq!(first, second);
}

#[test]
fn missing_input_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let o = vqc()
        .args(["preprocess", "--input"])
        .arg(dir.path().join("nope.csv"))
        .arg("--output")
        .arg(dir.path().join("out.csv"))
        .output()
        .unwrap();
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("nope.csv"), "{err}");
    assert!(!dir.path().join("out.csv").exists());
}

#[test]
fn bad_config_value_fails() {
    let o = vqc().args(["train", "--model", "Z12"]).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("Z12"));
}

#[test]
fn train_from_config_file_is_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    let run_dir = |name: &str| dir.path().join(name);
    for name in ["a", "b"] {
        std::fs::write(
            &config,
            format!(
                "dataset={}\nmodel=Z10\nmax_iterations=15\nseed=3\noutput_dir={}\n",
                dataset().display(),
                run_dir(name).display()
            ),
        )
        .unwrap();
        let o = vqc().arg("--config").arg(&config).arg("train").output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for table in ["metrics.csv", "loss_curve.csv", "model.txt"] {
        assert_eq!(
            std::fs::read(run_dir("a").join(table)).unwrap(),
            std::fs::read(run_dir("b").join(table)).unwrap(),
            "{table}"
        );
    }
    let curve = std::fs::read_to_string(run_dir("a").join("loss_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 1 + 15);
    let echo = std::fs::read_to_string(run_dir("a").join("config.txt")).unwrap();
    assert!(echo.contains("model=Z10\n") && echo.contains("train_fraction=0.7\n"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    std::fs::write(&config, "model=Z10\nmax_iterations=5\n").unwrap();
    let out = dir.path().join("svc");
    let o = vqc()
        .arg("--config")
        .arg(&config)
        .args(["train", "--model", "SVC", "--dataset"])
        .arg(dataset())
        .arg("--output-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read_to_string(out.join("loss_curve.csv")).unwrap(),
        "iteration,loss\n"
    );
    assert!(std::fs::read_to_string(out.join("config.txt"))
        .unwrap()
        .contains("model=SVC\n"));
}
