//! Python bindings: datasets, models, the three training methods, and the
//! fairness metrics, driven in-process.
//!
//! Usage from Python:
//!
//!     import fairtrain_py as ft
//!     train, test = ft.synthetic_convex(seed=1)
//!     result = ft.train_surrogate(train, test, alpha=(0.5, 0.5), beta=(2.0, 2.0),
//!                                 learning_rate=0.05, batch_size=8, rounds=1000,
//!                                 seed=1, eval_every=200)
//!     print(result.report()["ea_violation"])

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fairtrain::data::{synth, GroupedDataset, Split};
use fairtrain::error::Error;
use fairtrain::loss::FairHyperParams;
use fairtrain::metrics::{report_from_table, FairnessReport, PredictionTable};
use fairtrain::model::{classify, predict_proba, Architecture, ModelParams};
use fairtrain::optim::{run_baseline_parallel_sgd, run_minimax, run_psgds, MinimaxParams};
use fairtrain::trace::TrainingTrace;

fn to_py_err(e: Error) -> PyErr {
    match &e {
        Error::Config(_) | Error::DimensionMismatch { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// An in-memory two-group dataset.
#[pyclass(name = "Dataset")]
struct PyDataset {
    inner: GroupedDataset,
}

#[pymethods]
impl PyDataset {
    /// Build from row-major features, binary labels, and binary groups.
    #[new]
    fn new(features: Vec<Vec<f32>>, labels: Vec<u8>, groups: Vec<u8>) -> PyResult<Self> {
        if features.is_empty() {
            return Err(PyValueError::new_err("features must be nonempty"));
        }
        let dim = features[0].len();
        if features.iter().any(|r| r.len() != dim) {
            return Err(PyValueError::new_err("ragged feature rows"));
        }
        let flat: Vec<f32> = features.into_iter().flatten().collect();
        let inner = GroupedDataset::from_parts(flat, dim, labels, groups, Split::Train, 0)
            .map_err(to_py_err)?;
        Ok(PyDataset { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// `(group0_size, group1_size)`.
    fn group_sizes(&self) -> (usize, usize) {
        (self.inner.group_size(0), self.inner.group_size(1))
    }

    /// Group weights proportional to group sizes.
    fn proportional_alpha(&self) -> (f64, f64) {
        self.inner.proportional_alpha()
    }
}

/// A trained classifier.
#[pyclass(name = "Model")]
struct PyModel {
    inner: ModelParams,
}

#[pymethods]
impl PyModel {
    /// Probability of the positive class.
    fn predict_proba(&self, x: Vec<f32>) -> PyResult<f64> {
        predict_proba(&self.inner, &x).map_err(to_py_err)
    }

    /// Hard 0/1 prediction (ties at 0.5 go to 1).
    fn classify(&self, x: Vec<f32>) -> PyResult<u8> {
        classify(&self.inner, &x).map_err(to_py_err)
    }

    /// The flat parameter vector.
    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.clone()
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.inner.arch.param_count()
    }
}

fn report_dict<'py>(py: Python<'py>, r: &FairnessReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("overall_accuracy", r.overall_accuracy)?;
    d.set_item("acc_group0", r.acc_group0)?;
    d.set_item("acc_group1", r.acc_group1)?;
    d.set_item("worst_accuracy", r.worst_accuracy)?;
    d.set_item("ea_violation", r.ea_violation)?;
    d.set_item("dp_violation", r.dp_violation)?;
    d.set_item("eo_violation", r.eo_violation)?;
    Ok(d)
}

/// Outcome of one training run: the model plus the checkpoint trace.
#[pyclass(name = "TrainResult")]
struct PyTrainResult {
    trace: TrainingTrace,
    model: ModelParams,
}

#[pymethods]
impl PyTrainResult {
    /// Final-checkpoint fairness summary as a dict.
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let report = self
            .trace
            .final_report()
            .ok_or_else(|| PyRuntimeError::new_err("empty trace"))?;
        report_dict(py, &report)
    }

    /// One dict per evaluation checkpoint.
    fn trace<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.trace
            .records
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("round", r.round)?;
                d.set_item("overall_acc", r.overall_acc)?;
                d.set_item("acc_g0", r.acc_g0)?;
                d.set_item("acc_g1", r.acc_g1)?;
                d.set_item("worst_acc", r.worst_acc)?;
                d.set_item("overall_loss", r.overall_loss)?;
                d.set_item("surrogate_loss", r.surrogate_loss)?;
                d.set_item("ea", r.ea)?;
                d.set_item("dp", r.dp)?;
                d.set_item("eo", r.eo)?;
                d.set_item("running_avg_acc", r.running_avg_acc)?;
                d.set_item("cap_events", r.cap_events)?;
                Ok(d)
            })
            .collect()
    }

    /// The trained model.
    fn model(&self) -> PyModel {
        PyModel {
            inner: self.model.clone(),
        }
    }
}

fn parse_arch(arch: &str, input_dim: usize, hidden_units: usize) -> PyResult<Architecture> {
    match arch {
        "lr" => Architecture::logistic_regression(input_dim).map_err(to_py_err),
        "mlp" => Architecture::mlp(input_dim, hidden_units).map_err(to_py_err),
        other => Err(PyValueError::new_err(format!(
            "arch must be 'lr' or 'mlp', got '{other}'"
        ))),
    }
}

/// Train with the group-weighted surrogate objective.
#[pyfunction]
#[pyo3(signature = (train, test, alpha, beta, learning_rate, batch_size, rounds, seed=1, eval_every=500, arch="lr", hidden_units=10))]
#[allow(clippy::too_many_arguments)]
fn train_surrogate(
    train: &PyDataset,
    test: &PyDataset,
    alpha: (f64, f64),
    beta: (f64, f64),
    learning_rate: f64,
    batch_size: usize,
    rounds: u64,
    seed: u64,
    eval_every: u64,
    arch: &str,
    hidden_units: usize,
) -> PyResult<PyTrainResult> {
    let hp = FairHyperParams {
        alpha,
        beta,
        learning_rate,
        batch_size,
        rounds,
    };
    let arch = parse_arch(arch, train.inner.dim(), hidden_units)?;
    let (trace, model) =
        run_psgds(&train.inner, &test.inner, &hp, &arch, seed, eval_every).map_err(to_py_err)?;
    Ok(PyTrainResult { trace, model })
}

/// Plain parallel SGD baseline (beta = 0, size-proportional group weights).
#[pyfunction]
#[pyo3(signature = (train, test, learning_rate, batch_size, rounds, seed=1, eval_every=500, arch="lr", hidden_units=10))]
#[allow(clippy::too_many_arguments)]
fn train_parallel_sgd(
    train: &PyDataset,
    test: &PyDataset,
    learning_rate: f64,
    batch_size: usize,
    rounds: u64,
    seed: u64,
    eval_every: u64,
    arch: &str,
    hidden_units: usize,
) -> PyResult<PyTrainResult> {
    let arch = parse_arch(arch, train.inner.dim(), hidden_units)?;
    let (trace, model) = run_baseline_parallel_sgd(
        &train.inner,
        &test.inner,
        learning_rate,
        batch_size,
        rounds,
        &arch,
        seed,
        eval_every,
    )
    .map_err(to_py_err)?;
    Ok(PyTrainResult { trace, model })
}

/// Minimax baseline: stochastic descent on the model, projected ascent on
/// the group mixture.
#[pyfunction]
#[pyo3(signature = (train, test, eta_w, batch_size, rounds, eta_lambda=0.01, seed=1, eval_every=500, arch="lr", hidden_units=10))]
#[allow(clippy::too_many_arguments)]
fn train_minimax(
    train: &PyDataset,
    test: &PyDataset,
    eta_w: f64,
    batch_size: usize,
    rounds: u64,
    eta_lambda: f64,
    seed: u64,
    eval_every: u64,
    arch: &str,
    hidden_units: usize,
) -> PyResult<PyTrainResult> {
    let arch = parse_arch(arch, train.inner.dim(), hidden_units)?;
    let params = MinimaxParams {
        eta_w,
        eta_lambda,
        batch_size,
        rounds,
    };
    let (trace, model) = run_minimax(&train.inner, &test.inner, params, &arch, seed, eval_every)
        .map_err(to_py_err)?;
    Ok(PyTrainResult { trace, model })
}

/// Surrogate value of a base loss: `(1 + l)^(1+beta) / (1+beta)`.
#[pyfunction]
fn beta_surrogate(loss_value: f64, beta: f64) -> PyResult<f64> {
    if loss_value < 0.0 || beta < 0.0 {
        return Err(PyValueError::new_err(
            "loss_value and beta must be nonnegative",
        ));
    }
    Ok(fairtrain::loss::beta_surrogate(loss_value, beta))
}

/// Euclidean projection of a pair onto the probability simplex.
#[pyfunction]
fn project_simplex(v: (f64, f64)) -> (f64, f64) {
    fairtrain::optim::project_simplex(v)
}

/// Fairness metrics from parallel label/prediction/group lists.
#[pyfunction]
fn fairness_report<'py>(
    py: Python<'py>,
    y_true: Vec<u8>,
    y_pred: Vec<u8>,
    group: Vec<u8>,
) -> PyResult<Bound<'py, PyDict>> {
    if y_true.len() != y_pred.len() || y_true.len() != group.len() {
        return Err(PyValueError::new_err("input lists must share a length"));
    }
    let mut table = PredictionTable::default();
    for ((yt, yp), g) in y_true.iter().zip(&y_pred).zip(&group) {
        if *yt > 1 || *yp > 1 || *g > 1 {
            return Err(PyValueError::new_err("labels and groups must be 0 or 1"));
        }
        table.push(*yt, *yp, *g);
    }
    let report = report_from_table(&table).map_err(to_py_err)?;
    report_dict(py, &report)
}

/// Deterministic two-group logistic benchmark problem.
#[pyfunction]
#[pyo3(signature = (seed=1))]
fn synthetic_convex(seed: u64) -> PyResult<(PyDataset, PyDataset)> {
    let (train, test) = synth::synthetic_convex(seed).map_err(to_py_err)?;
    Ok((PyDataset { inner: train }, PyDataset { inner: test }))
}

#[pymodule]
fn fairtrain_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyTrainResult>()?;
    m.add_function(wrap_pyfunction!(train_surrogate, m)?)?;
    m.add_function(wrap_pyfunction!(train_parallel_sgd, m)?)?;
    m.add_function(wrap_pyfunction!(train_minimax, m)?)?;
    m.add_function(wrap_pyfunction!(beta_surrogate, m)?)?;
    m.add_function(wrap_pyfunction!(project_simplex, m)?)?;
    m.add_function(wrap_pyfunction!(fairness_report, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_convex, m)?)?;
    Ok(())
}
