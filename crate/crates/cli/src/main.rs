use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use vqc::experiment::{self, ExperimentConfig};

/// Caps the number of worker threads.
const THREADS_ENV: &str = "VQC_THREADS";

#[derive(Parser)]
#[command(name = "vqc", version, about = "Variational quantum classifier experiments on the Titanic passenger list")]
struct Cli {
    /// key=value config file; flags given on the command line override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean the raw passenger list and write the scaled feature table.
    Preprocess {
        #[arg(long, default_value = "data/titanic3.csv")]
        input: PathBuf,
        #[arg(long, default_value = "results/cleaned.csv")]
        output: PathBuf,
    },
    /// Train one model and evaluate it on the held-out split.
    Train(Overrides),
    /// Train every Z and ZZ model on one split.
    Grid(Overrides),
    /// Retrain one model with consecutive seeds on a fixed split.
    Repeat(Overrides),
    /// Train models across training fractions, with the SVC collapse table.
    Sweep(Overrides),
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    dataset: Option<String>,
    /// Z10..Z50, ZZ10..ZZ50 (steps of 5) or SVC.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    train_fraction: Option<String>,
    #[arg(long)]
    max_iterations: Option<String>,
    /// Seed for the initial variational angles.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    split_seed: Option<String>,
    /// Number of runs for `repeat`.
    #[arg(long, alias = "runs")]
    repeats: Option<String>,
    #[arg(long)]
    feature_map_reps: Option<String>,
    /// full or linear.
    #[arg(long)]
    entanglement: Option<String>,
    /// parity or qubit:<index>.
    #[arg(long)]
    readout: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
    #[arg(long)]
    rho_begin: Option<String>,
    #[arg(long)]
    rho_end: Option<String>,
    /// full or train.
    #[arg(long)]
    scaler_fit: Option<String>,
    #[arg(long)]
    stratified: Option<String>,
    /// Comma-separated model names.
    #[arg(long)]
    sweep_models: Option<String>,
    /// Comma-separated training fractions.
    #[arg(long)]
    sweep_fractions: Option<String>,
    #[arg(long)]
    collapse_seeds: Option<String>,
    #[arg(long)]
    collapse_fraction: Option<String>,
    #[arg(long)]
    svc_c: Option<String>,
    #[arg(long)]
    svc_tolerance: Option<String>,
    #[arg(long)]
    svc_max_passes: Option<String>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        let pairs = [
            ("dataset", &self.dataset),
            ("model", &self.model),
            ("train_fraction", &self.train_fraction),
            ("max_iterations", &self.max_iterations),
            ("seed", &self.seed),
            ("split_seed", &self.split_seed),
            ("repeats", &self.repeats),
            ("feature_map_reps", &self.feature_map_reps),
            ("entanglement", &self.entanglement),
            ("readout", &self.readout),
            ("output_dir", &self.output_dir),
            ("rho_begin", &self.rho_begin),
            ("rho_end", &self.rho_end),
            ("scaler_fit", &self.scaler_fit),
            ("stratified", &self.stratified),
            ("sweep_models", &self.sweep_models),
            ("sweep_fractions", &self.sweep_fractions),
            ("collapse_seeds", &self.collapse_seeds),
            ("collapse_fraction", &self.collapse_fraction),
            ("svc_c", &self.svc_c),
            ("svc_tolerance", &self.svc_tolerance),
            ("svc_max_passes", &self.svc_max_passes),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v).with_context(|| format!("--{}", key.replace('_', "-")))?;
            }
        }
        Ok(())
    }
}

fn load_config(path: Option<&PathBuf>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::from_file(p)
            .with_context(|| format!("reading config {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    overrides.apply(&mut cfg)?;
    cfg.validate()?;
    Ok(cfg)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"))
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Preprocess { input, output } => {
            let report = experiment::cmd_preprocess(input, output)
                .with_context(|| format!("preprocessing {}", input.display()))?;
            println!("{}", experiment::histogram_line(&report));
            println!(
                "rows: {}, ages imputed: {}, wrote {}",
                report.rows,
                report.ages_imputed,
                output.display()
            );
        }
        Command::Train(o) => {
            let cfg = load_config(cli.config.as_ref(), o)?;
            let record = experiment::cmd_train(&cfg).context("train")?;
            for (name, m) in [("train", &record.train), ("test", &record.test)] {
                println!(
                    "{name}: acc {:.4}, bacc {}, j {}",
                    m.acc,
                    fmt_opt(m.bacc),
                    fmt_opt(m.youden_j)
                );
            }
            println!("wrote {}", cfg.output_dir.display());
        }
        Command::Grid(o) => {
            let cfg = load_config(cli.config.as_ref(), o)?;
            let rows = experiment::cmd_grid(&cfg).context("grid")?;
            for (model, result) in &rows {
                match result {
                    Ok(cell) => println!(
                        "{model}: test acc {:.4}, bacc {}",
                        cell.test.acc,
                        fmt_opt(cell.test.bacc)
                    ),
                    Err(e) => println!("{model}: failed: {e}"),
                }
            }
            println!("wrote {}", cfg.output_dir.join("grid.csv").display());
        }
        Command::Repeat(o) => {
            let cfg = load_config(cli.config.as_ref(), o)?;
            let rows = experiment::cmd_repeat(&cfg).context("repeat")?;
            for r in &rows {
                println!(
                    "run {} (seed {}): acc {:.4}, bacc {}, j {}",
                    r.run,
                    r.train_seed,
                    r.test.acc,
                    fmt_opt(r.test.bacc),
                    fmt_opt(r.test.youden_j)
                );
            }
            println!("wrote {}", cfg.output_dir.join("repeat.csv").display());
        }
        Command::Sweep(o) => {
            let cfg = load_config(cli.config.as_ref(), o)?;
            let out = experiment::cmd_sweep(&cfg).context("sweep")?;
            let collapsed = out
                .svc_collapse
                .iter()
                .filter(|r| experiment::is_collapsed(&r.test))
                .count();
            println!(
                "{} sweep cells; SVC collapsed on {collapsed} of {} split seeds at fraction {}",
                out.cells.len(),
                out.svc_collapse.len(),
                cfg.collapse_fraction
            );
            println!("wrote {}", cfg.output_dir.display());
        }
    }
    Ok(())
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .with_context(|| format!("{THREADS_ENV}={v} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
