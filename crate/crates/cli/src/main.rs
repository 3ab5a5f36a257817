//! `fairtrain`: reproducible group-fair training experiments.
//!
//! Subcommands:
//!
//! - `train`: one experiment; writes `trace.csv`, `report.csv`, `config.echo`
//! - `sweep`: a grid of experiments over surrogate strengths and seeds
//! - `export`: flatten traces into plot-ready long-format CSV
//! - `validate-data`: load a dataset and print its counts and fingerprints
//! - `synth-data`: write synthetic stand-in files in the real formats
//!
//! Exit codes: 0 success, 2 config error, 3 data error, 4 divergence.

use clap::{Args, Parser, Subcommand};
use fairtrain::config::{parse_config, DatasetId, ExperimentConfig, DATA_DIR_ENV};
use fairtrain::data::{adult, compas, fashion};
use fairtrain::error::Error;
use fairtrain::experiment::{
    export_figures, run_experiment, run_sweep, Beta1Grid, SweepGrid, DEFAULT_FIGURE_METRICS,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fairtrain", version, about = "Group-fair training experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags mirroring the config keys; every present flag overrides the file.
#[derive(Args, Default)]
struct ConfigFlags {
    /// Structured-text config file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// adult | compas | fashion_mnist | synthetic_convex | synthetic_nonconvex
    #[arg(long)]
    dataset: Option<String>,
    /// lr | mlp
    #[arg(long)]
    arch: Option<String>,
    #[arg(long)]
    hidden_units: Option<String>,
    /// surrogate_min | parallel_sgd | minimax
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    alpha0: Option<String>,
    #[arg(long)]
    alpha1: Option<String>,
    #[arg(long)]
    beta0: Option<String>,
    #[arg(long)]
    beta1: Option<String>,
    #[arg(long)]
    learning_rate: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    rounds: Option<String>,
    #[arg(long)]
    eta_lambda: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    eval_every: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
    /// Dataset root; defaults to $FAIRTRAIN_DATA_DIR or ./data
    #[arg(long)]
    data_dir: Option<String>,
    #[arg(long)]
    include_protected: Option<String>,
    /// Evaluate checkpoints on the training split instead of the test split.
    #[arg(long)]
    eval_on_train: Option<String>,
}

impl ConfigFlags {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut pairs = Vec::new();
        let mut push = |key: &str, v: &Option<String>| {
            if let Some(v) = v {
                pairs.push((key.to_string(), v.clone()));
            }
        };
        push("dataset", &self.dataset);
        push("arch", &self.arch);
        push("hidden_units", &self.hidden_units);
        push("method", &self.method);
        push("alpha0", &self.alpha0);
        push("alpha1", &self.alpha1);
        push("beta0", &self.beta0);
        push("beta1", &self.beta1);
        push("learning_rate", &self.learning_rate);
        push("batch_size", &self.batch_size);
        push("rounds", &self.rounds);
        push("eta_lambda", &self.eta_lambda);
        push("seed", &self.seed);
        push("eval_every", &self.eval_every);
        push("output_dir", &self.output_dir);
        push("data_dir", &self.data_dir);
        push("include_protected", &self.include_protected);
        push("eval_on_train", &self.eval_on_train);
        pairs
    }

    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        parse_config(self.config.as_deref(), &self.overrides())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one training experiment.
    Train(ConfigFlags),
    /// Run a grid of experiments over beta values and seeds.
    Sweep {
        #[command(flatten)]
        flags: ConfigFlags,
        /// Comma-separated beta0 grid, e.g. "0,1,2".
        #[arg(long, default_value = "0,1,2")]
        beta0_grid: String,
        /// Comma-separated beta1 grid, or "tied" to mirror beta0.
        #[arg(long, default_value = "tied")]
        beta1_grid: String,
        /// Comma-separated seeds; each grid cell runs once per seed.
        #[arg(long, default_value = "1")]
        seed_grid: String,
    },
    /// Flatten trace files into a tidy long-format CSV.
    Export {
        /// Trace files to export; series labels default to file stems.
        #[arg(long, required = true, num_args = 1..)]
        trace: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated metric list.
        #[arg(long, default_value = "overall_acc,overall_loss,worst_acc,ea")]
        metrics: String,
    },
    /// Load a dataset and print row and group counts.
    ValidateData {
        /// adult | compas | fashion_mnist
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Seed for loaders with a seeded split.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Write synthetic stand-in dataset files in the real on-disk formats.
    SynthData {
        /// adult | compas | fashion_mnist
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn data_dir_or_default(dir: Option<PathBuf>) -> PathBuf {
    dir.or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"))
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{what}: cannot parse '{v}'")))
        })
        .collect()
}

fn parse_u64_list(s: &str, what: &str) -> Result<Vec<u64>, Error> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("{what}: cannot parse '{v}'")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Train(flags) => {
            let cfg = flags.resolve()?;
            let out = run_experiment(&cfg)?;
            println!("trace:  {}", out.trace_path.display());
            println!("report: {}", out.report_path.display());
            let r = &out.report;
            println!(
                "final: acc={:.4} worst={:.4} ea={:.4} dp={:.4} eo={}",
                r.overall_accuracy,
                r.worst_accuracy,
                r.ea_violation,
                r.dp_violation,
                r.eo_violation
                    .map(|v| format!("{v:.4}"))
                    .unwrap_or_else(|| "undefined".into()),
            );
            Ok(())
        }
        Command::Sweep {
            flags,
            beta0_grid,
            beta1_grid,
            seed_grid,
        } => {
            let cfg = flags.resolve()?;
            let grid = SweepGrid {
                beta0: parse_f64_list(&beta0_grid, "beta0-grid")?,
                beta1: if beta1_grid.trim() == "tied" {
                    Beta1Grid::Tied
                } else {
                    Beta1Grid::Values(parse_f64_list(&beta1_grid, "beta1-grid")?)
                },
                seeds: parse_u64_list(&seed_grid, "seed-grid")?,
            };
            let (results, path) = run_sweep(&cfg, &grid)?;
            println!("sweep:  {}", path.display());
            for cell in &results {
                match &cell.error {
                    None => println!(
                        "cell b0={} b1={}: worst={:.4}+/-{:.4} ea={:.4}+/-{:.4} ({} seeds)",
                        cell.beta0,
                        cell.beta1,
                        cell.worst_acc.0,
                        cell.worst_acc.1,
                        cell.ea.0,
                        cell.ea.1,
                        cell.n_seeds
                    ),
                    Some(e) => println!("cell b0={} b1={}: FAILED: {e}", cell.beta0, cell.beta1),
                }
            }
            Ok(())
        }
        Command::Export {
            trace,
            out,
            metrics,
        } => {
            let labeled: Vec<(String, PathBuf)> = trace
                .into_iter()
                .map(|p| {
                    let label = p
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "trace".into());
                    (label, p)
                })
                .collect();
            let metrics: Vec<String> = if metrics.trim().is_empty() {
                DEFAULT_FIGURE_METRICS
                    .iter()
                    .map(|s| s.to_string())
                    .collect()
            } else {
                metrics.split(',').map(|s| s.trim().to_string()).collect()
            };
            export_figures(&labeled, &out, &metrics)?;
            println!("export: {}", out.display());
            Ok(())
        }
        Command::ValidateData {
            dataset,
            data_dir,
            seed,
        } => {
            let dir = data_dir_or_default(data_dir);
            match DatasetId::parse(&dataset)? {
                DatasetId::Adult => {
                    let (train, test, s) =
                        adult::load_adult(&dir.join("adult.data"), &dir.join("adult.test"), false)?;
                    println!("adult: fingerprint {:#x}", s.fingerprint);
                    println!(
                        "train: {} raw rows, {} kept, group0 {} / group1 {} (width {})",
                        s.train.raw_rows,
                        s.train.kept_rows,
                        s.train.group0,
                        s.train.group1,
                        train.dim()
                    );
                    println!(
                        "test:  {} raw rows, {} kept, group0 {} / group1 {} (width {})",
                        s.test.raw_rows,
                        s.test.kept_rows,
                        s.test.group0,
                        s.test.group1,
                        test.dim()
                    );
                }
                DatasetId::Compas => {
                    let (train, _test, s) =
                        compas::load_compas(&dir.join("compas-scores-two-years.csv"), seed, false)?;
                    println!("compas: {} rows, fingerprint {:#x}", s.rows, s.fingerprint);
                    if let Some(w) = &s.cohort_warning {
                        println!("warning: {w}");
                    }
                    println!(
                        "female: {} train / {} test; male: {} train / {} test (width {})",
                        s.female_train,
                        s.female_test,
                        s.male_train,
                        s.male_test,
                        train.dim()
                    );
                }
                DatasetId::FashionMnist => {
                    let (_, _, s) = fashion::load_fashion_mnist(&dir)?;
                    println!("fashion_mnist: fingerprint {:#x}", s.fingerprint);
                    println!(
                        "shirt: {} train / {} test; non-shirt: {} train / {} test",
                        s.train_shirt, s.test_shirt, s.train_other, s.test_other
                    );
                }
                other => {
                    return Err(Error::Config(format!(
                        "validate-data: {} is generated in-process, nothing to validate",
                        other.name()
                    )))
                }
            }
            Ok(())
        }
        Command::SynthData {
            dataset,
            data_dir,
            seed,
        } => {
            let dir = data_dir_or_default(data_dir);
            match DatasetId::parse(&dataset)? {
                DatasetId::Adult => {
                    let (train, test) = adult::write_mirror_files(&dir, seed)?;
                    println!("wrote {}", train.display());
                    println!("wrote {}", test.display());
                }
                DatasetId::Compas => {
                    let path = compas::write_mirror_file(&dir, seed)?;
                    println!("wrote {}", path.display());
                }
                DatasetId::FashionMnist => {
                    fashion::write_mirror_files(&dir, seed)?;
                    println!("wrote IDX files under {}", dir.display());
                }
                other => {
                    return Err(Error::Config(format!(
                        "synth-data: {} is generated in-process, nothing to write",
                        other.name()
                    )))
                }
            }
            Ok(())
        }
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
