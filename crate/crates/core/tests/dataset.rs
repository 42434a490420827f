use std::path::{Path, PathBuf};

use vqc::data::{self, FEATURE_NAMES};

fn path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/titanic3.csv")
}

#[test]
fn canonical_file_cleans_to_known_counts() {
    let raw = data::load_raw(path()).unwrap();
    assert_eq!(raw.len(), 1309);
    let (ds, report) = data::clean(&raw).unwrap();
    assert_eq!((report.rows, report.survived, report.perished), (1309, 500, 809));
    assert_eq!(report.ages_imputed, 263);
    assert!((report.age_mean - 29.881_134_512_428_3).abs() < 1e-9);
    assert_eq!(ds.label_counts(), (809, 500));
    assert_eq!(ds.feature_names, FEATURE_NAMES);
    for row in &ds.features {
        assert_eq!(row.len(), 5);
        assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
    }
    for k in 0..5 {
        let col = ds.features.iter().map(|r| r[k]);
        assert_eq!(col.clone().fold(f64::INFINITY, f64::min), 0.0);
        assert_eq!(col.fold(f64::NEG_INFINITY, f64::max), 1.0);
    }
}

#[test]
fn canonical_split_sizes() {
    let (ds, _) = data::clean(&data::load_raw(path()).unwrap()).unwrap();
    for (f, train, test) in [(0.7, 916, 393), (0.9, 1178, 131), (0.1, 130, 1179)] {
        let (a, b) = data::split(&ds, f, 11).unwrap();
        assert_eq!((a.len(), b.len()), (train, test), "f = {f}");
    }
}

#[test]
fn missing_file_reports_path() {
    let err = data::load_raw("/nonexistent/titanic3.csv").unwrap_err();
    assert!(err.to_string().contains("/nonexistent/titanic3.csv"), "{err}");
}
