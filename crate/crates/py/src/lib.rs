//! Python bindings: datasets, labeling, the surrogate, the sampling
//! primitives, metrics and experiment runs.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use hggs_core::harness::{self, DatasetCache, ExperimentConfig};
use hggs_core::hggs::{
    gmm_stratify as core_gmm, gradient_degree_points, grid_point, SamplerConfig,
};
use hggs_core::ode_lab::{self, LabelingConfig, SystemId};
use hggs_core::surrogate::{self, TrainConfig};
use hggs_core::{metrics, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::TrainingDiverged { .. }
        | Error::IntegrationFailure { .. }
        | Error::LabelingFailures { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn system(name: &str) -> PyResult<SystemId> {
    name.parse().map_err(to_py)
}

/// A labeled set of coefficient vectors.
#[pyclass(name = "Dataset", module = "hggs", skip_from_py_object)]
#[derive(Clone)]
pub struct PyDataset {
    inner: ode_lab::Dataset,
}

#[pymethods]
impl PyDataset {
    /// LHS design of `n` points labeled by simulation.
    #[staticmethod]
    #[pyo3(signature = (system_name, n, seed=0))]
    fn generate(system_name: &str, n: usize, seed: u64) -> PyResult<Self> {
        let id = system(system_name)?;
        let inner = harness::generate_dataset(id, n, seed, &LabelingConfig::for_system(id), None)
            .map_err(to_py)?;
        Ok(PyDataset { inner })
    }

    #[staticmethod]
    fn from_parts(system_name: &str, coeffs: Vec<Vec<f64>>, labels: Vec<f64>) -> PyResult<Self> {
        let inner =
            ode_lab::Dataset::from_parts(system(system_name)?, coeffs, labels).map_err(to_py)?;
        Ok(PyDataset { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyDataset {
            inner: ode_lab::Dataset::load(&path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    #[getter]
    fn system(&self) -> &'static str {
        self.inner.system.name()
    }

    fn coeffs(&self) -> Vec<Vec<f64>> {
        self.inner.coeffs()
    }

    fn labels(&self) -> Vec<f64> {
        self.inner.labels()
    }

    #[getter]
    fn failure_count(&self) -> usize {
        self.inner.provenance.failure_count
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(system={}, n={})",
            self.inner.system,
            self.inner.len()
        )
    }
}

/// MLP mapping coefficients to oscillation frequency.
#[pyclass(name = "Surrogate", module = "hggs", skip_from_py_object)]
#[derive(Clone)]
pub struct PySurrogate {
    inner: surrogate::MlpSurrogate,
}

#[pymethods]
impl PySurrogate {
    /// Untrained network over the system's coefficient box.
    #[new]
    #[pyo3(signature = (system_name, hidden, seed=0))]
    fn new(system_name: &str, hidden: Vec<usize>, seed: u64) -> PyResult<Self> {
        let spec = system(system_name)?.spec();
        Ok(PySurrogate {
            inner: surrogate::MlpSurrogate::new(spec.coeff_box, &hidden, seed),
        })
    }

    /// Full-batch training; returns the per-epoch history as
    /// `(epoch, train_rmse, val_rmse)` tuples.
    #[pyo3(signature = (train, val, epochs, learning_rate=2e-3, weight_decay=1e-5, patience=200))]
    fn train(
        &mut self,
        train: &PyDataset,
        val: &PyDataset,
        epochs: usize,
        learning_rate: f64,
        weight_decay: f64,
        patience: usize,
    ) -> PyResult<Vec<(usize, f64, f64)>> {
        let mut cfg = TrainConfig::for_system(train.inner.system);
        cfg.learning_rate = learning_rate;
        cfg.weight_decay = weight_decay;
        cfg.early_stop_patience = patience;
        cfg.epochs_per_stage = epochs;
        cfg.seed = self.inner.seed;
        let report = surrogate::train(&mut self.inner, &train.inner, &val.inner, &cfg, epochs)
            .map_err(to_py)?;
        Ok(report
            .history
            .iter()
            .map(|r| (r.epoch, r.train_rmse, r.val_rmse))
            .collect())
    }

    fn predict(&self, coeffs: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.inner.predict_rows(&coeffs).map_err(to_py)
    }

    fn residuals(&self, ds: &PyDataset) -> PyResult<Vec<f64>> {
        surrogate::residuals(&self.inner, &ds.inner).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_checkpoint_json().map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PySurrogate {
            inner: surrogate::MlpSurrogate::from_checkpoint_json(text).map_err(to_py)?,
        })
    }

    #[getter]
    fn num_params(&self) -> usize {
        self.inner.num_params()
    }
}

#[pyfunction]
fn systems() -> Vec<&'static str> {
    SystemId::ALL.iter().map(|s| s.name()).collect()
}

#[pyfunction]
#[pyo3(signature = (system_name, n, seed=0))]
fn lhs_generate(system_name: &str, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    Ok(ode_lab::lhs_generate(&system(system_name)?.spec(), n, seed))
}

/// Oscillation frequency of one coefficient vector (0 when not oscillating).
#[pyfunction]
fn frequency(system_name: &str, coeffs: Vec<f64>) -> PyResult<f64> {
    let id = system(system_name)?;
    let cfg = LabelingConfig::for_system(id);
    ode_lab::label_one(&id.spec(), &coeffs, &cfg.integration, &cfg.frequency).map_err(to_py)
}

#[pyfunction]
fn gradient_degree(points: Vec<Vec<f64>>, labels: Vec<f64>, k: usize) -> PyResult<Vec<f64>> {
    gradient_degree_points(&points, &labels, k).map_err(to_py)
}

/// Residual strata as `(lr, mr, hr, means, fallback)`.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn gmm_stratify(
    residuals: Vec<f64>,
) -> PyResult<(Vec<usize>, Vec<usize>, Vec<usize>, [f64; 3], bool)> {
    let s = core_gmm(&residuals).map_err(to_py)?;
    Ok((s.lr, s.mr, s.hr, s.means, s.fallback))
}

/// `alpha * (a - b) + b`, componentwise.
#[pyfunction]
fn grid_sample(a: Vec<f64>, b: Vec<f64>, alpha: Vec<f64>) -> PyResult<Vec<f64>> {
    if a.len() != b.len() || a.len() != alpha.len() {
        return Err(PyValueError::new_err(
            "a, b and alpha must have equal lengths",
        ));
    }
    Ok(grid_point(&a, &b, &alpha))
}

#[pyfunction]
fn rmse(predictions: Vec<f64>, labels: Vec<f64>) -> PyResult<f64> {
    metrics::rmse(&predictions, &labels).map_err(to_py)
}

#[pyfunction]
fn imbalance_ratio(labels: Vec<f64>) -> PyResult<f64> {
    metrics::imbalance_ratio(&labels).map_err(to_py)
}

#[pyfunction]
fn gini_index(labels: Vec<f64>) -> PyResult<f64> {
    metrics::gini_index(&labels).map_err(to_py)
}

/// Runs the sampler on `initial` and returns `(model, final training set,
/// history JSON lines)`.
#[pyfunction]
#[pyo3(signature = (initial, val, cycles, epochs_per_stage, warm_epochs, seed=0))]
fn hggs_run(
    initial: &PyDataset,
    val: &PyDataset,
    cycles: usize,
    epochs_per_stage: usize,
    warm_epochs: usize,
    seed: u64,
) -> PyResult<(PySurrogate, PyDataset, String)> {
    let id = initial.inner.system;
    let scfg = SamplerConfig::for_initial_size(initial.inner.len(), cycles, seed);
    let mut tcfg = TrainConfig::for_system(id);
    tcfg.epochs_per_stage = epochs_per_stage;
    tcfg.warm_epochs = warm_epochs;
    tcfg.seed = seed;
    let (out, _) = hggs_core::hggs::hggs_run(
        &id.spec(),
        &initial.inner,
        &val.inner,
        &scfg,
        &tcfg,
        &LabelingConfig::for_system(id),
        None,
    )
    .map_err(to_py)?;
    let history = harness::runner::history_jsonl(&out.history).map_err(to_py)?;
    Ok((
        PySurrogate { inner: out.model },
        PyDataset {
            inner: out.train_set,
        },
        history,
    ))
}

/// Runs an experiment config; returns the number of failed cells.
#[pyfunction]
#[pyo3(signature = (config_path, out, cache=None, workers=1))]
fn run_experiment(
    config_path: PathBuf,
    out: PathBuf,
    cache: Option<PathBuf>,
    workers: usize,
) -> PyResult<usize> {
    let cfg = ExperimentConfig::load(&config_path).map_err(to_py)?;
    let cache = DatasetCache::new(harness::resolve_cache_root(
        cache.as_deref(),
        cfg.cache_dir.as_deref(),
    ));
    let summary = harness::run_experiment(&cfg, &out, &cache, workers).map_err(to_py)?;
    Ok(summary.failures.len())
}

#[pymodule]
fn hggs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PySurrogate>()?;
    m.add_function(wrap_pyfunction!(systems, m)?)?;
    m.add_function(wrap_pyfunction!(lhs_generate, m)?)?;
    m.add_function(wrap_pyfunction!(frequency, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_degree, m)?)?;
    m.add_function(wrap_pyfunction!(gmm_stratify, m)?)?;
    m.add_function(wrap_pyfunction!(grid_sample, m)?)?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add_function(wrap_pyfunction!(imbalance_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(gini_index, m)?)?;
    m.add_function(wrap_pyfunction!(hggs_run, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
