//! Experiment configuration: structured-text files, overrides, defaults.
//!
//! Config files are flat `key = value` lines (`#` comments and `[section]`
//! headers are tolerated and ignored). Command-line flags become override
//! pairs that win over file values. Every knob any downstream component
//! consumes lives in [`KNOWN_KEYS`] and is echoed back by
//! [`ExperimentConfig::echo`], so a run's `config.echo` file is a complete
//! record of what it did.

use crate::error::{Error, Result};
use crate::loss::FairHyperParams;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Environment variable naming the dataset root directory.
pub const DATA_DIR_ENV: &str = "FAIRTRAIN_DATA_DIR";

/// Every configuration key, in echo order.
pub const KNOWN_KEYS: [&str; 18] = [
    "alpha0",
    "alpha1",
    "arch",
    "batch_size",
    "beta0",
    "beta1",
    "data_dir",
    "dataset",
    "eta_lambda",
    "eval_every",
    "eval_on_train",
    "hidden_units",
    "include_protected",
    "learning_rate",
    "method",
    "output_dir",
    "rounds",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetId {
    Adult,
    Compas,
    FashionMnist,
    SyntheticConvex,
    SyntheticNonconvex,
}

impl DatasetId {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "adult" => Ok(DatasetId::Adult),
            "compas" => Ok(DatasetId::Compas),
            "fashion_mnist" => Ok(DatasetId::FashionMnist),
            "synthetic_convex" => Ok(DatasetId::SyntheticConvex),
            "synthetic_nonconvex" => Ok(DatasetId::SyntheticNonconvex),
            other => Err(Error::Config(format!(
                "dataset: unknown value '{other}' (expected adult | compas | fashion_mnist | synthetic_convex | synthetic_nonconvex)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DatasetId::Adult => "adult",
            DatasetId::Compas => "compas",
            DatasetId::FashionMnist => "fashion_mnist",
            DatasetId::SyntheticConvex => "synthetic_convex",
            DatasetId::SyntheticNonconvex => "synthetic_nonconvex",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchId {
    Lr,
    Mlp,
}

impl ArchId {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lr" => Ok(ArchId::Lr),
            "mlp" => Ok(ArchId::Mlp),
            other => Err(Error::Config(format!(
                "arch: unknown value '{other}' (expected lr | mlp)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ArchId::Lr => "lr",
            ArchId::Mlp => "mlp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    SurrogateMin,
    ParallelSgd,
    Minimax,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "surrogate_min" => Ok(Method::SurrogateMin),
            "parallel_sgd" => Ok(Method::ParallelSgd),
            "minimax" => Ok(Method::Minimax),
            other => Err(Error::Config(format!(
                "method: unknown value '{other}' (expected surrogate_min | parallel_sgd | minimax)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::SurrogateMin => "surrogate_min",
            Method::ParallelSgd => "parallel_sgd",
            Method::Minimax => "minimax",
        }
    }
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetId,
    pub arch: ArchId,
    pub hidden_units: usize,
    pub method: Method,
    pub hp: FairHyperParams,
    /// Ascent step of the minimax baseline.
    pub eta_lambda: f64,
    pub seed: u64,
    pub eval_every: u64,
    pub output_dir: PathBuf,
    pub data_dir: PathBuf,
    pub include_protected: bool,
    /// Evaluate checkpoints on the training split instead of the test split.
    pub eval_on_train: bool,
}

impl ExperimentConfig {
    /// Published per-dataset defaults: group weights proportional to the
    /// official group sizes, surrogate strength 2 on both groups, learning
    /// rate 1e-3, and the per-dataset round/batch counts.
    pub fn defaults(dataset: DatasetId) -> Self {
        let (alpha, batch_size, rounds, eval_every) = match dataset {
            DatasetId::Adult => ((0.0127, 0.9873), 8, 50_000, 500),
            DatasetId::Compas => ((0.1901, 0.8099), 8, 50_000, 500),
            DatasetId::FashionMnist => ((0.1, 0.9), 1, 100_000, 1_000),
            DatasetId::SyntheticConvex | DatasetId::SyntheticNonconvex => {
                ((0.5, 0.5), 8, 10_000, 500)
            }
        };
        let arch = match dataset {
            DatasetId::SyntheticNonconvex => ArchId::Mlp,
            _ => ArchId::Lr,
        };
        let data_dir = std::env::var_os(DATA_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("data"));
        ExperimentConfig {
            dataset,
            arch,
            hidden_units: 10,
            method: Method::SurrogateMin,
            hp: FairHyperParams {
                alpha,
                beta: (2.0, 2.0),
                learning_rate: 0.001,
                batch_size,
                rounds,
            },
            eta_lambda: 0.01,
            seed: 1,
            eval_every,
            output_dir: PathBuf::from("runs").join(dataset.name()),
            data_dir,
            include_protected: false,
            eval_on_train: false,
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse::<T>()
                .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
        }
        match key {
            "dataset" => self.dataset = DatasetId::parse(value)?,
            "arch" => self.arch = ArchId::parse(value)?,
            "hidden_units" => self.hidden_units = num(key, value)?,
            "method" => self.method = Method::parse(value)?,
            "alpha0" => self.hp.alpha.0 = num(key, value)?,
            "alpha1" => self.hp.alpha.1 = num(key, value)?,
            "beta0" => self.hp.beta.0 = num(key, value)?,
            "beta1" => self.hp.beta.1 = num(key, value)?,
            "learning_rate" => self.hp.learning_rate = num(key, value)?,
            "batch_size" => self.hp.batch_size = num(key, value)?,
            "rounds" => self.hp.rounds = num(key, value)?,
            "eta_lambda" => self.eta_lambda = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "eval_every" => self.eval_every = num(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "data_dir" => self.data_dir = PathBuf::from(value),
            "include_protected" => self.include_protected = parse_bool(key, value)?,
            "eval_on_train" => self.eval_on_train = parse_bool(key, value)?,
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Range checks beyond per-key parsing.
    pub fn validate(&self) -> Result<()> {
        self.hp.validated()?;
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be >= 1".into()));
        }
        if self.arch == ArchId::Mlp && self.hidden_units == 0 {
            return Err(Error::Config("hidden_units must be >= 1".into()));
        }
        if !self.eta_lambda.is_finite() || self.eta_lambda < 0.0 {
            return Err(Error::Config("eta_lambda must be nonnegative".into()));
        }
        Ok(())
    }

    /// Every knob and its resolved value, keyed by [`KNOWN_KEYS`].
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("dataset".into(), self.dataset.name().into());
        m.insert("arch".into(), self.arch.name().into());
        m.insert("hidden_units".into(), self.hidden_units.to_string());
        m.insert("method".into(), self.method.name().into());
        m.insert("alpha0".into(), self.hp.alpha.0.to_string());
        m.insert("alpha1".into(), self.hp.alpha.1.to_string());
        m.insert("beta0".into(), self.hp.beta.0.to_string());
        m.insert("beta1".into(), self.hp.beta.1.to_string());
        m.insert("learning_rate".into(), self.hp.learning_rate.to_string());
        m.insert("batch_size".into(), self.hp.batch_size.to_string());
        m.insert("rounds".into(), self.hp.rounds.to_string());
        m.insert("eta_lambda".into(), self.eta_lambda.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("eval_every".into(), self.eval_every.to_string());
        m.insert("output_dir".into(), self.output_dir.display().to_string());
        m.insert("data_dir".into(), self.data_dir.display().to_string());
        m.insert(
            "include_protected".into(),
            self.include_protected.to_string(),
        );
        m.insert("eval_on_train".into(), self.eval_on_train.to_string());
        m
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        other => Err(Error::Config(format!(
            "{key}: expected true/false, got '{other}'"
        ))),
    }
}

/// Parse `key = value` lines. Returns pairs in file order.
fn parse_kv_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            continue; // section headers carry no information here
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "{}:{}: expected 'key = value', got '{raw}'",
                path.display(),
                lineno + 1
            )));
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Resolve a full configuration from an optional file plus override pairs
/// (e.g. command-line flags). The dataset key is resolved first so its
/// defaults seed everything else; later values win within each source and
/// overrides win over the file.
pub fn parse_config(
    file: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig> {
    let mut pairs = match file {
        Some(p) => parse_kv_file(p)?,
        None => Vec::new(),
    };
    pairs.extend(overrides.iter().cloned());

    let dataset = match pairs.iter().rev().find(|(k, _)| k == "dataset") {
        Some((_, v)) => DatasetId::parse(v)?,
        None => DatasetId::Adult,
    };
    let mut cfg = ExperimentConfig::defaults(dataset);
    for (key, value) in &pairs {
        cfg.set(key, value)?;
    }
    cfg.validate()?;
    // normalize alpha exactly onto the simplex
    cfg.hp = cfg.hp.validated()?;
    Ok(cfg)
}
