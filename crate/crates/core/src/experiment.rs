//! End-to-end experiment runner: single runs, the model grid, the
//! repeatability study and the training-size sweep.
//!
//! Every table is a comma-separated file written to a temporary name and
//! renamed into place, so a failed command never leaves a partial table.
//! Table contents depend only on the configuration; wall-clock data goes to
//! the `run.txt` sidecar.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use crate::circuits::{params_to_reps, AnsatzSpec, Entanglement, FeatureMapKind, FeatureMapSpec};
use crate::classifier::{Readout, TrainConfig, TrainReport, VqcModel};
use crate::data::{self, CleaningReport, Dataset, SplitOptions};
use crate::metrics::{evaluate, MetricReport};
use crate::svc::{svc_train, SvcConfig};
use crate::{Error, Result};

/// Parameter budgets of the model grid.
pub const GRID_PARAMS: [usize; 9] = [10, 15, 20, 25, 30, 35, 40, 45, 50];

/// A test-set Youden index at or below this marks a collapsed classifier.
pub const COLLAPSE_THRESHOLD: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelName {
    Vqc { kind: FeatureMapKind, params: usize },
    Svc,
}

impl ModelName {
    /// The 18 variational models, Z family first.
    pub fn grid() -> Vec<ModelName> {
        [FeatureMapKind::Z, FeatureMapKind::ZZ]
            .into_iter()
            .flat_map(|kind| GRID_PARAMS.map(|params| ModelName::Vqc { kind, params }))
            .collect()
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelName::Vqc { kind, params } => write!(f, "{kind}{params}"),
            ModelName::Svc => f.write_str("SVC"),
        }
    }
}

impl FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        if upper == "SVC" {
            return Ok(ModelName::Svc);
        }
        let (kind, digits) = if let Some(rest) = upper.strip_prefix("ZZ") {
            (FeatureMapKind::ZZ, rest)
        } else if let Some(rest) = upper.strip_prefix('Z') {
            (FeatureMapKind::Z, rest)
        } else {
            return Err(unknown_model(s));
        };
        match digits.parse::<usize>() {
            Ok(params) if GRID_PARAMS.contains(&params) => Ok(ModelName::Vqc { kind, params }),
            _ => Err(unknown_model(s)),
        }
    }
}

fn unknown_model(s: &str) -> Error {
    Error::Config(format!(
        "unknown model `{s}` (expected Z10..Z50, ZZ10..ZZ50 in steps of 5, or SVC)"
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalerFit {
    /// Min-max bounds from the whole cleaned set.
    Full,
    /// Bounds from the training side of each split.
    Train,
}

impl fmt::Display for ScalerFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalerFit::Full => "full",
            ScalerFit::Train => "train",
        })
    }
}

impl FromStr for ScalerFit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(ScalerFit::Full),
            "train" => Ok(ScalerFit::Train),
            other => Err(Error::Config(format!(
                "unknown scaler_fit `{other}` (expected full or train)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset_path: PathBuf,
    pub model: ModelName,
    pub train_fraction: f64,
    pub max_iterations: usize,
    /// Seed for the initial variational angles.
    pub seed: u64,
    /// Seed for the train/test shuffle, shared by every cell of a study.
    pub split_seed: u64,
    pub repeats: usize,
    pub feature_map_reps: usize,
    pub entanglement: Entanglement,
    pub readout: Readout,
    pub output_dir: PathBuf,
    pub rho_begin: f64,
    pub rho_end: f64,
    pub scaler_fit: ScalerFit,
    pub stratified: bool,
    pub sweep_models: Vec<ModelName>,
    pub sweep_fractions: Vec<f64>,
    /// Number of split seeds in the SVC collapse table.
    pub collapse_seeds: usize,
    pub collapse_fraction: f64,
    pub svc_c: f64,
    pub svc_tolerance: f64,
    pub svc_max_passes: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let svc = SvcConfig::default();
        ExperimentConfig {
            dataset_path: PathBuf::from("data/titanic3.csv"),
            model: ModelName::Vqc {
                kind: FeatureMapKind::Z,
                params: 20,
            },
            train_fraction: 0.7,
            max_iterations: train.max_iterations,
            seed: 0,
            split_seed: 0,
            repeats: 1,
            feature_map_reps: 2,
            entanglement: Entanglement::Full,
            readout: Readout::Parity,
            output_dir: PathBuf::from("results"),
            rho_begin: train.rho_begin,
            rho_end: train.rho_end,
            scaler_fit: ScalerFit::Full,
            stratified: false,
            sweep_models: vec![
                ModelName::Vqc {
                    kind: FeatureMapKind::Z,
                    params: 15,
                },
                ModelName::Vqc {
                    kind: FeatureMapKind::Z,
                    params: 20,
                },
                ModelName::Svc,
            ],
            sweep_fractions: (1..=9).map(|k| k as f64 / 10.0).collect(),
            collapse_seeds: 10,
            collapse_fraction: 0.9,
            svc_c: svc.c,
            svc_tolerance: svc.tolerance,
            svc_max_passes: svc.max_passes,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_list<T, F>(value: &str, parse: F) -> Result<Vec<T>>
where
    F: Fn(&str) -> Result<T>,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(parse)
        .collect()
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(T::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    /// Sets one field from its `key=value` spelling.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "dataset" => self.dataset_path = PathBuf::from(value),
            "model" => self.model = value.parse()?,
            "train_fraction" => self.train_fraction = parse_value(key, value)?,
            "max_iterations" => self.max_iterations = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "split_seed" => self.split_seed = parse_value(key, value)?,
            "repeats" => self.repeats = parse_value(key, value)?,
            "feature_map_reps" => self.feature_map_reps = parse_value(key, value)?,
            "entanglement" => self.entanglement = value.parse()?,
            "readout" => self.readout = value.parse()?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "rho_begin" => self.rho_begin = parse_value(key, value)?,
            "rho_end" => self.rho_end = parse_value(key, value)?,
            "scaler_fit" => self.scaler_fit = value.parse()?,
            "stratified" => self.stratified = parse_value(key, value)?,
            "sweep_models" => self.sweep_models = parse_list(value, str::parse)?,
            "sweep_fractions" => {
                self.sweep_fractions = parse_list(value, |v| parse_value(key, v))?
            }
            "collapse_seeds" => self.collapse_seeds = parse_value(key, value)?,
            "collapse_fraction" => self.collapse_fraction = parse_value(key, value)?,
            "svc_c" => self.svc_c = parse_value(key, value)?,
            "svc_tolerance" => self.svc_tolerance = parse_value(key, value)?,
            "svc_max_passes" => self.svc_max_passes = parse_value(key, value)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("config line {}: expected key=value, got `{line}`", n + 1))
            })?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fraction_ok = |f: f64| f > 0.0 && f < 1.0;
        if !fraction_ok(self.train_fraction) {
            return Err(Error::Config(format!(
                "train_fraction {} outside (0, 1)",
                self.train_fraction
            )));
        }
        if let Some(f) = self.sweep_fractions.iter().find(|f| !fraction_ok(**f)) {
            return Err(Error::Config(format!("sweep fraction {f} outside (0, 1)")));
        }
        if !fraction_ok(self.collapse_fraction) {
            return Err(Error::Config(format!(
                "collapse_fraction {} outside (0, 1)",
                self.collapse_fraction
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.feature_map_reps == 0 {
            return Err(Error::Config("feature_map_reps must be at least 1".into()));
        }
        if !(self.rho_begin > 0.0 && self.rho_end > 0.0 && self.rho_end <= self.rho_begin) {
            return Err(Error::Config(format!(
                "need 0 < rho_end <= rho_begin, got {} and {}",
                self.rho_end, self.rho_begin
            )));
        }
        if !(self.svc_c > 0.0 && self.svc_tolerance > 0.0) || self.svc_max_passes == 0 {
            return Err(Error::Config("SVC settings must be positive".into()));
        }
        Ok(())
    }

    /// Every effective setting as `key=value` lines; feeding the text back
    /// through [`ExperimentConfig::apply_text`] reproduces `self`.
    pub fn to_record(&self) -> String {
        let lines = [
            ("dataset", self.dataset_path.display().to_string()),
            ("model", self.model.to_string()),
            ("train_fraction", self.train_fraction.to_string()),
            ("max_iterations", self.max_iterations.to_string()),
            ("seed", self.seed.to_string()),
            ("split_seed", self.split_seed.to_string()),
            ("repeats", self.repeats.to_string()),
            ("feature_map_reps", self.feature_map_reps.to_string()),
            ("entanglement", self.entanglement.to_string()),
            ("readout", self.readout.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("rho_begin", self.rho_begin.to_string()),
            ("rho_end", self.rho_end.to_string()),
            ("scaler_fit", self.scaler_fit.to_string()),
            ("stratified", self.stratified.to_string()),
            ("sweep_models", join(&self.sweep_models)),
            ("sweep_fractions", join(&self.sweep_fractions)),
            ("collapse_seeds", self.collapse_seeds.to_string()),
            ("collapse_fraction", self.collapse_fraction.to_string()),
            ("svc_c", self.svc_c.to_string()),
            ("svc_tolerance", self.svc_tolerance.to_string()),
            ("svc_max_passes", self.svc_max_passes.to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            max_iterations: self.max_iterations,
            seed,
            rho_begin: self.rho_begin,
            rho_end: self.rho_end,
        }
    }

    fn svc_config(&self) -> SvcConfig {
        SvcConfig {
            c: self.svc_c,
            tolerance: self.svc_tolerance,
            max_passes: self.svc_max_passes,
        }
    }
}

/// Writes `contents` next to `path` under a temporary name, then renames.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Writes a group of files, removing the ones already written if any fails.
fn write_all(files: &[(PathBuf, String)]) -> Result<()> {
    for (i, (path, contents)) in files.iter().enumerate() {
        if let Err(e) = atomic_write(path, contents.as_bytes()) {
            for (done, _) in &files[..i] {
                let _ = fs::remove_file(done);
            }
            return Err(e);
        }
    }
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<(Dataset, CleaningReport)> {
    data::clean(&data::load_raw(path)?)
}

/// `survived: <n>, perished: <n>`
pub fn histogram_line(report: &CleaningReport) -> String {
    format!(
        "survived: {}, perished: {}",
        report.survived, report.perished
    )
}

/// Cleans `input`, writes the scaled feature table to `output` and the
/// cleaning audit to `output` with `.audit.txt` appended.
pub fn cmd_preprocess(input: &Path, output: &Path) -> Result<CleaningReport> {
    let (dataset, report) = load_dataset(input)?;
    let mut audit_name = output.file_name().unwrap_or_default().to_os_string();
    audit_name.push(".audit.txt");
    let audit = format!(
        "rows={}\nsurvived={}\nperished={}\nages_imputed={}\nage_mean={}\nsibsp_defaulted={}\nparch_defaulted={}\nfeature_min={}\nfeature_max={}\n",
        report.rows,
        report.survived,
        report.perished,
        report.ages_imputed,
        report.age_mean,
        report.sibsp_defaulted,
        report.parch_defaulted,
        join(&dataset.scaler.min),
        join(&dataset.scaler.max),
    );
    write_all(&[
        (output.to_path_buf(), dataset.to_csv()),
        (output.with_file_name(audit_name), audit),
    ])?;
    Ok(report)
}

/// Splits with the configured options, re-fitting the scaler on the
/// training side when asked to.
pub fn make_split(
    cfg: &ExperimentConfig,
    data: &Dataset,
    fraction: f64,
    split_seed: u64,
) -> Result<(Dataset, Dataset)> {
    let opts = SplitOptions {
        train_fraction: fraction,
        seed: split_seed,
        stratified: cfg.stratified,
    };
    let (train, test) = data::split_with(data, &opts)?;
    match cfg.scaler_fit {
        ScalerFit::Full => Ok((train, test)),
        ScalerFit::Train => data::refit_scaler_on_train(&train, &test),
    }
}

/// Outcome of fitting one model on one split.
#[derive(Clone, Debug)]
pub struct CellResult {
    pub model: ModelName,
    pub train: MetricReport,
    pub test: MetricReport,
    /// `None` for the SVC baseline.
    pub train_report: Option<TrainReport>,
    pub model_record: String,
}

pub fn fit_and_evaluate(
    cfg: &ExperimentConfig,
    model: ModelName,
    train: &Dataset,
    test: &Dataset,
    train_seed: u64,
) -> Result<CellResult> {
    match model {
        ModelName::Svc => {
            let c = cfg.svc_config();
            let svc = svc_train(train, c.c, c.tolerance, c.max_passes)?;
            Ok(CellResult {
                model,
                train: evaluate(&svc.predict_batch(&train.features)?, &train.labels)?,
                test: evaluate(&svc.predict_batch(&test.features)?, &test.labels)?,
                train_report: None,
                model_record: svc.to_record(),
            })
        }
        ModelName::Vqc { kind, params } => {
            let n = train.n_features();
            let mut fm = FeatureMapSpec::new(kind, n, cfg.feature_map_reps);
            fm.entanglement = cfg.entanglement;
            let mut ansatz = AnsatzSpec::new(n, params_to_reps(params, n)?);
            ansatz.entanglement = cfg.entanglement;
            let mut vqc = VqcModel::new(fm, ansatz, cfg.readout)?;
            let report = vqc.train(train, &cfg.train_config(train_seed))?;
            if !report.optimizer_ok() {
                log::warn!(
                    "{model}: optimizer stopped early ({})",
                    report.termination.as_str()
                );
            }
            Ok(CellResult {
                model,
                train: evaluate(&vqc.predict_batch(&train.features)?, &train.labels)?,
                test: evaluate(&vqc.predict_batch(&test.features)?, &test.labels)?,
                train_report: Some(report),
                model_record: vqc.to_record(),
            })
        }
    }
}

/// Single-run result with the configuration that produced it.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub config: String,
    pub train: MetricReport,
    pub test: MetricReport,
    pub train_report: Option<TrainReport>,
    pub started_unix: f64,
    pub finished_unix: f64,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// `split,` + metric columns, one row each for train and test.
pub fn metrics_table(train: &MetricReport, test: &MetricReport) -> String {
    format!(
        "split,{}\ntrain,{}\ntest,{}\n",
        MetricReport::CSV_HEADER,
        train.csv_row(),
        test.csv_row()
    )
}

pub fn loss_curve_table(report: Option<&TrainReport>) -> String {
    let mut out = String::from("iteration,loss\n");
    for (i, v) in report.map(|r| r.loss_curve.as_slice()).unwrap_or_default().iter().enumerate() {
        out.push_str(&format!("{},{v}\n", i + 1));
    }
    out
}

/// Trains the configured model and writes `metrics.csv`, `loss_curve.csv`,
/// `model.txt`, `config.txt` and `run.txt` into the output directory.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let started = unix_now();
    let (dataset, _) = load_dataset(&cfg.dataset_path)?;
    let (train, test) = make_split(cfg, &dataset, cfg.train_fraction, cfg.split_seed)?;
    let cell = fit_and_evaluate(cfg, cfg.model, &train, &test, cfg.seed)?;
    let record = RunRecord {
        config: cfg.to_record(),
        train: cell.train,
        test: cell.test,
        train_report: cell.train_report,
        started_unix: started,
        finished_unix: unix_now(),
    };

    let dir = &cfg.output_dir;
    let mut run = format!(
        "started_unix={}\nfinished_unix={}\ntrain_rows={}\ntest_rows={}\n",
        record.started_unix,
        record.finished_unix,
        train.len(),
        test.len()
    );
    if let Some(r) = &record.train_report {
        run.push_str(&format!(
            "iterations_used={}\nevaluations={}\ntermination={}\nfinal_loss={}\nwall_time_secs={}\n",
            r.iterations_used,
            r.evaluations,
            r.termination.as_str(),
            r.final_loss,
            r.wall_time_secs
        ));
    }
    write_all(&[
        (dir.join("metrics.csv"), metrics_table(&record.train, &record.test)),
        (dir.join("loss_curve.csv"), loss_curve_table(record.train_report.as_ref())),
        (dir.join("model.txt"), cell.model_record),
        (dir.join("config.txt"), record.config.clone()),
        (dir.join("run.txt"), run),
    ])?;
    Ok(record)
}

fn prefixed_header(prefix: &str) -> String {
    MetricReport::CSV_HEADER
        .split(',')
        .map(|c| format!("{prefix}_{c}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn empty_cells(n: usize) -> String {
    ",".repeat(n.saturating_sub(1))
}

fn sanitize(message: &str) -> String {
    message.replace([',', '\n', '\r'], ";")
}

pub type GridRow = (ModelName, Result<CellResult>);

/// Trains all 18 grid models on one split and writes `grid.csv`. A model
/// that fails gets an error row; the others still run.
pub fn cmd_grid(cfg: &ExperimentConfig) -> Result<Vec<GridRow>> {
    cfg.validate()?;
    let (dataset, _) = load_dataset(&cfg.dataset_path)?;
    let (train, test) = make_split(cfg, &dataset, cfg.train_fraction, cfg.split_seed)?;
    let rows: Vec<GridRow> = ModelName::grid()
        .into_par_iter()
        .map(|model| (model, fit_and_evaluate(cfg, model, &train, &test, cfg.seed)))
        .collect();

    let width = MetricReport::CSV_HEADER.split(',').count();
    let mut table = format!(
        "model,status,{},{}\n",
        prefixed_header("train"),
        prefixed_header("test")
    );
    for (model, result) in &rows {
        match result {
            Ok(cell) => table.push_str(&format!(
                "{model},ok,{},{}\n",
                cell.train.csv_row(),
                cell.test.csv_row()
            )),
            Err(e) => {
                log::error!("{model} failed: {e}");
                table.push_str(&format!(
                    "{model},error: {},{},{}\n",
                    sanitize(&e.to_string()),
                    empty_cells(width),
                    empty_cells(width)
                ))
            }
        }
    }
    write_all(&[
        (cfg.output_dir.join("grid.csv"), table),
        (cfg.output_dir.join("config.txt"), cfg.to_record()),
    ])?;
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepeatRow {
    pub run: usize,
    pub train_seed: u64,
    pub test: MetricReport,
}

/// Trains `cfg.repeats` instances of `cfg.model` on one fixed split, with
/// training seeds `cfg.seed, cfg.seed + 1, ...`, and writes `repeat.csv`.
pub fn cmd_repeat(cfg: &ExperimentConfig) -> Result<Vec<RepeatRow>> {
    cfg.validate()?;
    let (dataset, _) = load_dataset(&cfg.dataset_path)?;
    let (train, test) = make_split(cfg, &dataset, cfg.train_fraction, cfg.split_seed)?;
    let rows = (0..cfg.repeats)
        .into_par_iter()
        .map(|run| {
            let train_seed = cfg.seed.wrapping_add(run as u64);
            let cell = fit_and_evaluate(cfg, cfg.model, &train, &test, train_seed)?;
            Ok(RepeatRow {
                run,
                train_seed,
                test: cell.test,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    let mut table = String::from("run,train_seed,acc,bacc,j\n");
    for r in &rows {
        table.push_str(&format!(
            "{},{},{},{},{}\n",
            r.run,
            r.train_seed,
            r.test.acc,
            cell(r.test.bacc),
            cell(r.test.youden_j)
        ));
    }
    write_all(&[
        (cfg.output_dir.join("repeat.csv"), table),
        (cfg.output_dir.join("config.txt"), cfg.to_record()),
    ])?;
    Ok(rows)
}

/// True when the Youden index is undefined or at most [`COLLAPSE_THRESHOLD`].
pub fn is_collapsed(report: &MetricReport) -> bool {
    report.youden_j.is_none_or(|j| j <= COLLAPSE_THRESHOLD)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub model: ModelName,
    pub fraction: f64,
    pub split_seed: u64,
    pub train_rows: usize,
    pub test_rows: usize,
    pub test: MetricReport,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "model,fraction,split_seed,train_rows,test_rows";

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.model,
            self.fraction,
            self.split_seed,
            self.train_rows,
            self.test_rows,
            self.test.csv_row(),
            u8::from(is_collapsed(&self.test))
        )
    }
}

fn sweep_table(rows: &[SweepRow]) -> String {
    let mut out = format!(
        "{},{},collapsed\n",
        SweepRow::CSV_HEADER,
        MetricReport::CSV_HEADER
    );
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    /// Models × fractions at the configured split seed, model-major.
    pub cells: Vec<SweepRow>,
    /// SVC at the collapse fraction over consecutive split seeds.
    pub svc_collapse: Vec<SweepRow>,
}

/// Each fraction gets its own split drawn with the same split seed.
/// Writes `sweep.csv` and `svc_collapse.csv`.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let (dataset, _) = load_dataset(&cfg.dataset_path)?;
    let cell = |model: ModelName, fraction: f64, split_seed: u64| -> Result<SweepRow> {
        let (train, test) = make_split(cfg, &dataset, fraction, split_seed)?;
        let result = fit_and_evaluate(cfg, model, &train, &test, cfg.seed)?;
        Ok(SweepRow {
            model,
            fraction,
            split_seed,
            train_rows: train.len(),
            test_rows: test.len(),
            test: result.test,
        })
    };

    let grid: Vec<(ModelName, f64)> = cfg
        .sweep_models
        .iter()
        .flat_map(|&m| cfg.sweep_fractions.iter().map(move |&f| (m, f)))
        .collect();
    let cells = grid
        .into_par_iter()
        .map(|(m, f)| cell(m, f, cfg.split_seed))
        .collect::<Result<Vec<_>>>()?;
    let svc_collapse = (0..cfg.collapse_seeds as u64)
        .into_par_iter()
        .map(|k| cell(ModelName::Svc, cfg.collapse_fraction, cfg.split_seed.wrapping_add(k)))
        .collect::<Result<Vec<_>>>()?;

    write_all(&[
        (cfg.output_dir.join("sweep.csv"), sweep_table(&cells)),
        (cfg.output_dir.join("svc_collapse.csv"), sweep_table(&svc_collapse)),
        (cfg.output_dir.join("config.txt"), cfg.to_record()),
    ])?;
    Ok(SweepOutput {
        cells,
        svc_collapse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ConfusionCounts;

    #[test]
    fn model_names() {
        assert_eq!(ModelName::grid().len(), 18);
        assert_eq!(ModelName::grid()[0].to_string(), "Z10");
        assert_eq!(ModelName::grid()[17].to_string(), "ZZ50");
        for m in ModelName::grid() {
            assert_eq!(m.to_string().parse::<ModelName>().unwrap(), m);
        }
        assert_eq!("svc".parse::<ModelName>().unwrap(), ModelName::Svc);
        for bad in ["Z12", "ZZ55", "X20", "Z", ""] {
            assert!(bad.parse::<ModelName>().is_err(), "{bad}");
        }
    }

    #[test]
    fn config_echo_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text("# comment\nmodel=ZZ35\nseed=7\nsweep_fractions=0.5,0.7\nreadout=qubit:2\n\nstratified=true\n")
            .unwrap();
        assert_eq!(cfg.sweep_fractions, vec![0.5, 0.7]);
        let mut back = ExperimentConfig::default();
        back.apply_text(&cfg.to_record()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn config_errors() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.apply_text("colour=blue").is_err());
        assert!(cfg.apply_text("max_iterations").is_err());
        assert!(cfg.apply_text("seed=minus one").is_err());
        cfg.train_fraction = 1.0;
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }

    #[test]
    fn default_sweep_is_three_by_nine() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.sweep_models.len() * cfg.sweep_fractions.len(), 27);
        assert_eq!(cfg.sweep_fractions[6], 0.7);
    }

    #[test]
    fn collapse_flag() {
        let r = |tp, fp, tn, fn_| {
            crate::metrics::report(&ConfusionCounts { tp, fp, tn, fn_ }).unwrap()
        };
        // Predicting the majority class everywhere on a skewed test split.
        assert!(is_collapsed(&r(0, 0, 80, 51)));
        // Test split holding a single class: J is undefined.
        assert!(is_collapsed(&r(0, 0, 131, 0)));
        assert!(!is_collapsed(&r(40, 10, 70, 11)));
        assert!(is_collapsed(&r(26, 40, 40, 25)));
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/table.csv");
        atomic_write(&path, b"a,b\n").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"a,b\n");
        let names: Vec<_> = fs::read_dir(path.parent().unwrap()).unwrap().collect();
        assert_eq!(names.len(), 1);
    }
}
