//! The `titanic3` passenger table: ingestion, cleaning, scaling and splitting.
//!
//! Cleaning keeps five features, in this column order: `pclass`, `sex`
//! (female = 0, male = 1), `age` (missing values replaced by the mean of the
//! present ages), `sibsp` and `parch`. Every column is then min-max scaled to
//! `[0, 1]`. The label is `survived`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub const COLUMNS: [&str; 14] = [
    "pclass",
    "survived",
    "name",
    "sex",
    "age",
    "sibsp",
    "parch",
    "ticket",
    "fare",
    "cabin",
    "embarked",
    "boat",
    "body",
    "home.dest",
];

pub const FEATURE_NAMES: [&str; 5] = ["pclass", "sex", "age", "sibsp", "parch"];

const AGE: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct RawRecord {
    pub pclass: u8,
    pub survived: u8,
    pub name: String,
    pub sex: String,
    pub age: Option<f64>,
    pub sibsp: Option<u32>,
    pub parch: Option<u32>,
    pub ticket: String,
    pub fare: Option<f64>,
    pub cabin: Option<String>,
    pub embarked: Option<String>,
    pub boat: Option<String>,
    pub body: Option<u32>,
    pub home_dest: Option<String>,
}

pub fn load_raw(path: impl AsRef<Path>) -> Result<Vec<RawRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_raw(file, path)
}

/// Parses comma-separated `titanic3` rows. Empty cells and `?` are missing.
pub fn parse_raw<R: Read>(reader: R, source: impl AsRef<Path>) -> Result<Vec<RawRecord>> {
    let source = source.as_ref();
    let err = |line: u64, message: String| Error::Parse {
        path: source.to_path_buf(),
        line,
        message,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| err(1, format!("unreadable header: {e}")))?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(err(1, "empty file: no header row".into()));
    }

    let mut index = HashMap::new();
    for (i, name) in headers.iter().enumerate() {
        if !COLUMNS.contains(&name) {
            return Err(err(1, format!("unknown column `{name}`")));
        }
        if index.insert(name.to_string(), i).is_some() {
            return Err(err(1, format!("duplicate column `{name}`")));
        }
    }
    if let Some(missing) = COLUMNS.iter().find(|c| !index.contains_key(**c)) {
        return Err(err(1, format!("missing column `{missing}`")));
    }

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, format!("malformed row: {e}"))
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let cell = |name: &str| -> Option<&str> {
            let v = row.get(index[name]).unwrap_or("");
            (!v.is_empty() && v != "?").then_some(v)
        };
        let text = |name: &str| cell(name).map(str::to_string);
        let number = |name: &str| -> Result<Option<f64>> {
            cell(name)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| err(line, format!("`{name}` is not a number: `{v}`")))
                })
                .transpose()
        };
        let count = |name: &str| -> Result<Option<u32>> {
            cell(name)
                .map(|v| {
                    v.parse::<u32>()
                        .map_err(|_| err(line, format!("`{name}` is not a count: `{v}`")))
                })
                .transpose()
        };

        let pclass = match cell("pclass") {
            Some("1") => 1,
            Some("2") => 2,
            Some("3") => 3,
            other => return Err(err(line, format!("pclass must be 1, 2 or 3, got {other:?}"))),
        };
        let survived = match cell("survived") {
            Some("0") => 0,
            Some("1") => 1,
            other => return Err(err(line, format!("survived must be 0 or 1, got {other:?}"))),
        };

        records.push(RawRecord {
            pclass,
            survived,
            name: text("name").unwrap_or_default(),
            sex: text("sex").unwrap_or_default(),
            age: number("age")?,
            sibsp: count("sibsp")?,
            parch: count("parch")?,
            ticket: text("ticket").unwrap_or_default(),
            fare: number("fare")?,
            cabin: text("cabin"),
            embarked: text("embarked"),
            boat: text("boat"),
            body: count("body")?,
            home_dest: text("home.dest"),
        });
    }
    if records.is_empty() {
        return Err(err(1, "no data rows".into()));
    }
    Ok(records)
}

/// Per-column min-max scaler. Zero-range columns map to 0.
#[derive(Clone, Debug, PartialEq)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidInput("cannot fit a scaler on zero rows".into()))?;
        let mut min = vec![f64::INFINITY; width];
        let mut max = vec![f64::NEG_INFINITY; width];
        for row in rows {
            if row.len() != width {
                return Err(Error::InvalidInput("ragged feature matrix".into()));
            }
            for (k, &v) in row.iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        for k in 0..width {
            if min[k] == max[k] {
                log::warn!("feature column {k} has zero range; it scales to a constant 0");
            }
        }
        Ok(MinMaxScaler { min, max })
    }

    /// The identity scaler on `width` columns already in `[0, 1]`.
    pub fn identity(width: usize) -> Self {
        MinMaxScaler {
            min: vec![0.0; width],
            max: vec![1.0; width],
        }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(k, &v)| {
                let range = self.max[k] - self.min[k];
                if range == 0.0 {
                    0.0
                } else {
                    (v - self.min[k]) / range
                }
            })
            .collect()
    }

    pub fn inverse_transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(k, &v)| self.min[k] + v * (self.max[k] - self.min[k]))
            .collect()
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

/// Scaled feature rows with binary labels (1 = positive class).
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
    /// The scaler that produced `features` from the unscaled values.
    pub scaler: MinMaxScaler,
}

impl Dataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<u8>,
        feature_names: Vec<String>,
        scaler: MinMaxScaler,
    ) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} feature rows for {} labels",
                features.len(),
                labels.len()
            )));
        }
        let width = feature_names.len();
        if features.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidInput(format!(
                "every feature row must have {width} columns"
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::InvalidInput(format!("label {bad} is not 0 or 1")));
        }
        Ok(Dataset {
            features,
            labels,
            feature_names,
            scaler,
        })
    }

    /// Builds a dataset from rows already in `[0, 1]`, with generic names.
    pub fn from_scaled(features: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        let width = features.first().map_or(0, Vec::len);
        let names = (0..width).map(|k| format!("f{k}")).collect();
        Dataset::new(features, labels, names, MinMaxScaler::identity(width))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// `(negatives, positives)`.
    pub fn label_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&y| y == 1).count();
        (self.len() - pos, pos)
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: rows.iter().map(|&i| self.features[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            scaler: self.scaler.clone(),
        }
    }

    /// Audit dump: the scaled features and the label, one row per passenger.
    pub fn to_csv(&self) -> String {
        let mut out = self.feature_names.join(",");
        out.push_str(",label\n");
        for (row, y) in self.features.iter().zip(&self.labels) {
            for v in row {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{y}");
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CleaningReport {
    pub rows: usize,
    pub survived: usize,
    pub perished: usize,
    pub ages_imputed: usize,
    /// Mean of the present ages, in years.
    pub age_mean: f64,
    pub sibsp_defaulted: usize,
    pub parch_defaulted: usize,
}

/// Selects, encodes and imputes the five features without scaling them.
pub fn extract_features(records: &[RawRecord]) -> Result<(Vec<Vec<f64>>, Vec<u8>, CleaningReport)> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to clean".into()));
    }
    let present: Vec<f64> = records.iter().filter_map(|r| r.age).collect();
    if present.is_empty() {
        return Err(Error::InvalidInput("no passenger has a recorded age".into()));
    }
    let age_mean = present.iter().sum::<f64>() / present.len() as f64;

    let mut report = CleaningReport {
        rows: records.len(),
        survived: 0,
        perished: 0,
        ages_imputed: records.len() - present.len(),
        age_mean,
        sibsp_defaulted: 0,
        parch_defaulted: 0,
    };
    let mut rows = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let sex = match r.sex.to_ascii_lowercase().as_str() {
            "female" => 0.0,
            "male" => 1.0,
            other => {
                return Err(Error::InvalidInput(format!(
                    "record {i}: unknown sex `{other}`"
                )))
            }
        };
        let sibsp = r.sibsp.unwrap_or_else(|| {
            report.sibsp_defaulted += 1;
            0
        });
        let parch = r.parch.unwrap_or_else(|| {
            report.parch_defaulted += 1;
            0
        });
        rows.push(vec![
            f64::from(r.pclass),
            sex,
            r.age.unwrap_or(age_mean),
            f64::from(sibsp),
            f64::from(parch),
        ]);
        labels.push(r.survived);
        if r.survived == 1 {
            report.survived += 1;
        } else {
            report.perished += 1;
        }
    }
    if report.sibsp_defaulted + report.parch_defaulted > 0 {
        log::warn!(
            "{} missing sibsp and {} missing parch values treated as 0",
            report.sibsp_defaulted,
            report.parch_defaulted
        );
    }
    Ok((rows, labels, report))
}

/// Extracts the features and min-max scales them on the whole table.
pub fn clean(records: &[RawRecord]) -> Result<(Dataset, CleaningReport)> {
    let (rows, labels, report) = extract_features(records)?;
    let scaler = MinMaxScaler::fit(&rows)?;
    let features = scaler.transform(&rows);
    let names = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    Ok((Dataset::new(features, labels, names, scaler)?, report))
}

/// Mean of the unscaled age column, for audit.
pub fn age_column_mean(rows: &[Vec<f64>]) -> f64 {
    rows.iter().map(|r| r[AGE]).sum::<f64>() / rows.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitOptions {
    pub train_fraction: f64,
    pub seed: u64,
    /// Split each class separately so both sides keep the class ratio.
    pub stratified: bool,
}

impl SplitOptions {
    pub fn new(train_fraction: f64, seed: u64) -> Self {
        SplitOptions {
            train_fraction,
            seed,
            stratified: false,
        }
    }
}

/// `floor(n * fraction)`, tolerant of representation error just below an integer.
pub fn train_size(n: usize, fraction: f64) -> usize {
    (n as f64 * fraction + 1e-9).floor() as usize
}

/// Seeded shuffle of the row indices; the first `floor(N f)` go to training.
pub fn split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    split_with(data, &SplitOptions::new(train_fraction, seed))
}

pub fn split_with(data: &Dataset, opts: &SplitOptions) -> Result<(Dataset, Dataset)> {
    let f = opts.train_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::InvalidInput(format!(
            "train fraction {f} outside (0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (train_idx, test_idx) = if opts.stratified {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for class in [0u8, 1] {
            let mut idx: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == class).collect();
            idx.shuffle(&mut rng);
            let k = train_size(idx.len(), f);
            train.extend_from_slice(&idx[..k]);
            test.extend_from_slice(&idx[k..]);
        }
        train.shuffle(&mut rng);
        test.shuffle(&mut rng);
        (train, test)
    } else {
        let mut idx: Vec<usize> = (0..data.len()).collect();
        idx.shuffle(&mut rng);
        let k = train_size(idx.len(), f);
        let test = idx.split_off(k);
        (idx, test)
    };
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::InvalidInput(format!(
            "train fraction {f} leaves an empty side on {} rows",
            data.len()
        )));
    }
    Ok((data.subset(&train_idx), data.subset(&test_idx)))
}

/// Re-fits the scaler on the training side only and rescales both sides.
/// Test rows may then fall outside `[0, 1]`.
pub fn refit_scaler_on_train(train: &Dataset, test: &Dataset) -> Result<(Dataset, Dataset)> {
    let unscale = |d: &Dataset| -> Vec<Vec<f64>> {
        d.features
            .iter()
            .map(|r| d.scaler.inverse_transform_row(r))
            .collect()
    };
    let train_raw = unscale(train);
    let test_raw = unscale(test);
    let scaler = MinMaxScaler::fit(&train_raw)?;
    let rebuild = |raw: &[Vec<f64>], d: &Dataset| {
        Dataset::new(
            scaler.transform(raw),
            d.labels.clone(),
            d.feature_names.clone(),
            scaler.clone(),
        )
    };
    Ok((rebuild(&train_raw, train)?, rebuild(&test_raw, test)?))
}
