//! Experiment driver: dataset dispatch, run outputs, sweeps, figure export.
//!
//! A run writes three files into its output directory, all byte-deterministic
//! for a fixed `(config, seed)`:
//!
//! - `trace.csv`: one row per evaluation checkpoint ([`crate::trace`])
//! - `report.csv`: the final fairness summary
//! - `config.echo`: every resolved knob plus the dataset fingerprints
//!
//! `sweep.csv` aggregates final-checkpoint metrics per grid cell, and
//! [`export_figures`] flattens traces into a tidy long-format CSV for
//! external plotting.

use crate::config::{ArchId, DatasetId, ExperimentConfig, Method};
use crate::data::{adult, compas, fashion, synth, GroupedDataset};
use crate::error::{Error, Result};
use crate::metrics::FairnessReport;
use crate::model::Architecture;
use crate::optim::{run_baseline_parallel_sgd, run_minimax, run_psgds, MinimaxParams};
use crate::trace::TrainingTrace;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub const REPORT_HEADER: &str =
    "overall_accuracy,acc_group0,acc_group1,worst_accuracy,ea_violation,dp_violation,eo_violation";

/// Default metrics exported for figures.
pub const DEFAULT_FIGURE_METRICS: [&str; 4] = ["overall_acc", "overall_loss", "worst_acc", "ea"];

/// Paths produced by one run.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub trace_path: PathBuf,
    pub report_path: PathBuf,
    pub echo_path: PathBuf,
    pub trace: TrainingTrace,
    pub report: FairnessReport,
}

/// Load the configured dataset pair. File-backed datasets resolve under
/// `cfg.data_dir`; synthetic ones are generated in-process from the seed.
pub fn load_datasets(cfg: &ExperimentConfig) -> Result<(GroupedDataset, GroupedDataset)> {
    match cfg.dataset {
        DatasetId::Adult => {
            let (train, test, _) = adult::load_adult(
                &cfg.data_dir.join("adult.data"),
                &cfg.data_dir.join("adult.test"),
                cfg.include_protected,
            )?;
            Ok((train, test))
        }
        DatasetId::Compas => {
            let (train, test, _) = compas::load_compas(
                &cfg.data_dir.join("compas-scores-two-years.csv"),
                cfg.seed,
                cfg.include_protected,
            )?;
            Ok((train, test))
        }
        DatasetId::FashionMnist => {
            let (train, test, _) = fashion::load_fashion_mnist(&cfg.data_dir)?;
            Ok((train, test))
        }
        DatasetId::SyntheticConvex => synth::synthetic_convex(cfg.seed),
        DatasetId::SyntheticNonconvex => synth::synthetic_nonconvex(cfg.seed),
    }
}

fn architecture(cfg: &ExperimentConfig, input_dim: usize) -> Result<Architecture> {
    match cfg.arch {
        ArchId::Lr => Architecture::logistic_regression(input_dim),
        ArchId::Mlp => Architecture::mlp(input_dim, cfg.hidden_units),
    }
}

fn write_report_csv(path: &Path, report: &FairnessReport) -> Result<()> {
    let eo = match report.eo_violation {
        Some(v) => v.to_string(),
        None => "undefined".to_string(),
    };
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{REPORT_HEADER}")?;
    writeln!(
        f,
        "{},{},{},{},{},{},{}",
        report.overall_accuracy,
        report.acc_group0,
        report.acc_group1,
        report.worst_accuracy,
        report.ea_violation,
        report.dp_violation,
        eo
    )?;
    Ok(())
}

/// Read a `report.csv` back into a [`FairnessReport`].
pub fn read_report_csv(path: &Path) -> Result<FairnessReport> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read report {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Data("empty report".into()))?;
    if header != REPORT_HEADER {
        return Err(Error::Data(format!("unexpected report header: {header}")));
    }
    let row = lines
        .next()
        .ok_or_else(|| Error::Data("report has no data row".into()))?;
    let fields: Vec<&str> = row.split(',').collect();
    if fields.len() != 7 {
        return Err(Error::Data("report row must have 7 fields".into()));
    }
    let num = |i: usize| -> Result<f64> {
        fields[i]
            .parse()
            .map_err(|_| Error::Data(format!("bad report value '{}'", fields[i])))
    };
    Ok(FairnessReport {
        overall_accuracy: num(0)?,
        acc_group0: num(1)?,
        acc_group1: num(2)?,
        worst_accuracy: num(3)?,
        ea_violation: num(4)?,
        dp_violation: num(5)?,
        eo_violation: if fields[6] == "undefined" {
            None
        } else {
            Some(num(6)?)
        },
    })
}

fn write_config_echo(
    path: &Path,
    cfg: &ExperimentConfig,
    train: &GroupedDataset,
    test: &GroupedDataset,
) -> Result<()> {
    let mut out = String::new();
    for (k, v) in cfg.echo() {
        writeln!(out, "{k} = {v}").expect("string write");
    }
    writeln!(out, "train_fingerprint = {:#x}", train.fingerprint()).expect("string write");
    writeln!(out, "test_fingerprint = {:#x}", test.fingerprint()).expect("string write");
    writeln!(out, "train_rows = {}", train.len()).expect("string write");
    writeln!(out, "test_rows = {}", test.len()).expect("string write");
    writeln!(out, "train_group0 = {}", train.group_size(0)).expect("string write");
    writeln!(out, "train_group1 = {}", train.group_size(1)).expect("string write");
    std::fs::write(path, out)?;
    Ok(())
}

/// Train per the config on preloaded data and return the trace. Exposed so
/// sweeps and tests can reuse loaded datasets across runs.
pub fn run_on_datasets(
    cfg: &ExperimentConfig,
    train: &GroupedDataset,
    test: &GroupedDataset,
) -> Result<TrainingTrace> {
    let arch = architecture(cfg, train.dim())?;
    let eval = if cfg.eval_on_train { train } else { test };
    let (trace, _model) = match cfg.method {
        Method::SurrogateMin => run_psgds(train, eval, &cfg.hp, &arch, cfg.seed, cfg.eval_every)?,
        Method::ParallelSgd => run_baseline_parallel_sgd(
            train,
            eval,
            cfg.hp.learning_rate,
            cfg.hp.batch_size,
            cfg.hp.rounds,
            &arch,
            cfg.seed,
            cfg.eval_every,
        )?,
        Method::Minimax => {
            let params = MinimaxParams {
                eta_w: cfg.hp.learning_rate,
                eta_lambda: cfg.eta_lambda,
                batch_size: cfg.hp.batch_size,
                rounds: cfg.hp.rounds,
            };
            run_minimax(train, eval, params, &arch, cfg.seed, cfg.eval_every)?
        }
    };
    Ok(trace)
}

/// Run one experiment end to end and write `trace.csv`, `report.csv`, and
/// `config.echo` into `cfg.output_dir`. A divergence still writes the
/// partial trace before the error propagates.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let (train, test) = load_datasets(cfg)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let trace_path = cfg.output_dir.join("trace.csv");
    let report_path = cfg.output_dir.join("report.csv");
    let echo_path = cfg.output_dir.join("config.echo");
    write_config_echo(&echo_path, cfg, &train, &test)?;

    let trace = match run_on_datasets(cfg, &train, &test) {
        Ok(trace) => trace,
        Err(Error::Divergence {
            round,
            partial_trace,
        }) => {
            partial_trace.write_csv(&trace_path)?;
            return Err(Error::Divergence {
                round,
                partial_trace,
            });
        }
        Err(e) => return Err(e),
    };
    trace.write_csv(&trace_path)?;
    let report = trace
        .final_report()
        .ok_or_else(|| Error::Data("empty trace".into()))?;
    write_report_csv(&report_path, &report)?;
    Ok(ExperimentOutput {
        trace_path,
        report_path,
        echo_path,
        trace,
        report,
    })
}

/// Parameter grid for sweeps. `beta1` either mirrors `beta0` (tied) or takes
/// its own list, in which case the grid is the cross product.
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub beta0: Vec<f64>,
    pub beta1: Beta1Grid,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone)]
pub enum Beta1Grid {
    Tied,
    Values(Vec<f64>),
}

impl SweepGrid {
    /// The (beta0, beta1) cells, in sweep order.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        match &self.beta1 {
            Beta1Grid::Tied => self.beta0.iter().map(|&b| (b, b)).collect(),
            Beta1Grid::Values(b1s) => {
                let mut cells = Vec::new();
                for &b0 in &self.beta0 {
                    for &b1 in b1s {
                        cells.push((b0, b1));
                    }
                }
                cells
            }
        }
    }
}

/// Aggregate of one sweep cell over its seeds.
#[derive(Debug, Clone)]
pub struct SweepCellResult {
    pub beta0: f64,
    pub beta1: f64,
    pub n_seeds: usize,
    /// `(mean, stddev)` per metric; `None` when every run left it undefined.
    pub overall_acc: (f64, f64),
    pub worst_acc: (f64, f64),
    pub ea: (f64, f64),
    pub dp: (f64, f64),
    pub eo: Option<(f64, f64)>,
    /// First error message, when any seed failed.
    pub error: Option<String>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Run the grid, one training run per (cell, seed). Failures are recorded
/// per cell and the sweep continues. Returns the per-cell aggregates and
/// writes `sweep.csv` under the base config's output directory.
pub fn run_sweep(
    base: &ExperimentConfig,
    grid: &SweepGrid,
) -> Result<(Vec<SweepCellResult>, PathBuf)> {
    if grid.beta0.is_empty() || grid.seeds.is_empty() {
        return Err(Error::Config("sweep grid must be nonempty".into()));
    }
    base.validate()?;
    std::fs::create_dir_all(&base.output_dir)?;
    let mut results = Vec::new();
    for (beta0, beta1) in grid.cells() {
        let mut reports = Vec::new();
        let mut error = None;
        for &seed in &grid.seeds {
            let mut cfg = base.clone();
            cfg.hp.beta = (beta0, beta1);
            cfg.seed = seed;
            cfg.output_dir = base
                .output_dir
                .join(format!("cell-b0_{beta0}-b1_{beta1}"))
                .join(format!("seed-{seed}"));
            match run_experiment(&cfg) {
                Ok(out) => reports.push(out.report),
                Err(e) => {
                    error.get_or_insert(e.to_string());
                }
            }
        }
        let collect = |f: fn(&FairnessReport) -> f64| -> (f64, f64) {
            let vals: Vec<f64> = reports.iter().map(f).collect();
            if vals.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                mean_std(&vals)
            }
        };
        let eo_vals: Vec<f64> = reports.iter().filter_map(|r| r.eo_violation).collect();
        results.push(SweepCellResult {
            beta0,
            beta1,
            n_seeds: reports.len(),
            overall_acc: collect(|r| r.overall_accuracy),
            worst_acc: collect(|r| r.worst_accuracy),
            ea: collect(|r| r.ea_violation),
            dp: collect(|r| r.dp_violation),
            eo: if eo_vals.is_empty() {
                None
            } else {
                Some(mean_std(&eo_vals))
            },
            error,
        });
    }

    let path = base.output_dir.join("sweep.csv");
    let mut out = String::from(
        "beta0,beta1,n_seeds,overall_acc_mean,overall_acc_std,worst_acc_mean,worst_acc_std,ea_mean,ea_std,dp_mean,dp_std,eo_mean,eo_std,status\n",
    );
    for r in &results {
        let (eo_mean, eo_std) = match r.eo {
            Some((m, s)) => (m.to_string(), s.to_string()),
            None => ("undefined".to_string(), "undefined".to_string()),
        };
        let status = match &r.error {
            None => "ok".to_string(),
            Some(e) => format!("error: {}", e.replace(',', ";")),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.beta0,
            r.beta1,
            r.n_seeds,
            r.overall_acc.0,
            r.overall_acc.1,
            r.worst_acc.0,
            r.worst_acc.1,
            r.ea.0,
            r.ea.1,
            r.dp.0,
            r.dp.1,
            eo_mean,
            eo_std,
            status
        )
        .expect("string write");
    }
    std::fs::write(&path, out)?;
    Ok((results, path))
}

fn metric_value(rec: &crate::trace::TraceRecord, metric: &str) -> Result<Option<f64>> {
    Ok(match metric {
        "overall_acc" => Some(rec.overall_acc),
        "acc_g0" => Some(rec.acc_g0),
        "acc_g1" => Some(rec.acc_g1),
        "worst_acc" => Some(rec.worst_acc),
        "overall_loss" => Some(rec.overall_loss),
        "surrogate_loss" => Some(rec.surrogate_loss),
        "ea" => Some(rec.ea),
        "dp" => Some(rec.dp),
        "eo" => rec.eo,
        other => return Err(Error::Config(format!("export: unknown metric '{other}'"))),
    })
}

/// Flatten traces into tidy long-format rows
/// `series,round,metric,value`, appending a running-average series
/// (`<metric>_ravg`, the mean over checkpoints so far) for each metric.
/// Undefined values are skipped rather than written.
pub fn export_figures(
    traces: &[(String, PathBuf)],
    out_path: &Path,
    metrics: &[String],
) -> Result<()> {
    if traces.is_empty() {
        return Err(Error::Config("export needs at least one trace".into()));
    }
    let mut out = String::from("series,round,metric,value\n");
    for (label, path) in traces {
        let trace = TrainingTrace::read_csv(path)?;
        for metric in metrics {
            for rec in &trace.records {
                if let Some(v) = metric_value(rec, metric)? {
                    writeln!(out, "{label},{},{metric},{v}", rec.round).expect("string write");
                }
            }
            let mut sum = 0.0;
            let mut count = 0usize;
            for rec in &trace.records {
                if let Some(v) = metric_value(rec, metric)? {
                    sum += v;
                    count += 1;
                    writeln!(
                        out,
                        "{label},{},{metric}_ravg,{}",
                        rec.round,
                        sum / count as f64
                    )
                    .expect("string write");
                }
            }
        }
    }
    std::fs::write(out_path, out)?;
    Ok(())
}
