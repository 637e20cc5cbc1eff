//! Python bindings. Structured values cross the boundary as plain dicts and
//! lists, converted through their serde representation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::de::DeserializeOwned;
use serde::Serialize;

use wcb_core::incentive::{self, DividendContext, SatisfactionInputs};
use wcb_core::metrics::aggregate::aggregate;
use wcb_core::{potential, ExperimentBundle, PolicyKind, RemunerationPolicy, Task, UtilityWeights, Volunteer, WcbError};

fn err(e: WcbError) -> PyErr {
    if e.is_io() {
        PyOSError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Simulation settings. Keyword arguments override the defaults (or the
/// JSON document when one is given), using the same field names.
#[pyclass(name = "Config", module = "wcb", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: wcb_core::SimulationConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (json = None, **overrides))]
    fn new(json: Option<&str>, overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let base = match json {
            Some(text) => wcb_core::SimulationConfig::from_json(text).map_err(err)?,
            None => wcb_core::SimulationConfig::default(),
        };
        Self::merged(&base, overrides)
    }

    /// Copy with some fields replaced.
    #[pyo3(signature = (**overrides))]
    fn replace(&self, overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        Self::merged(&self.inner, overrides)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn rounds(&self) -> u32 {
        self.inner.rounds
    }

    #[getter]
    fn replications(&self) -> u32 {
        self.inner.replications
    }

    #[getter]
    fn rng_seed(&self) -> u64 {
        self.inner.rng_seed
    }

    #[getter]
    fn policy(&self) -> &'static str {
        self.inner.policy.as_str()
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.inner.threshold
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(policy={:?}, rounds={}, replications={}, rng_seed={})",
            self.inner.policy.as_str(),
            self.inner.rounds,
            self.inner.replications,
            self.inner.rng_seed
        )
    }
}

impl PyConfig {
    fn merged(base: &wcb_core::SimulationConfig, overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut value = serde_json::to_value(base).map_err(|e| PyValueError::new_err(e.to_string()))?;
        if let Some(kw) = overrides {
            let patch: serde_json::Map<String, serde_json::Value> = from_py(kw.as_any())?;
            let fields = value.as_object_mut().expect("config serializes to an object");
            for (k, v) in patch {
                if !fields.contains_key(&k) {
                    return Err(PyValueError::new_err(format!("unknown config field {k:?}")));
                }
                fields.insert(k, v);
            }
        }
        let inner: wcb_core::SimulationConfig =
            serde_json::from_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(err)?;
        Ok(PyConfig { inner })
    }
}

/// All replications of one policy.
#[pyclass(name = "Experiment", module = "wcb")]
struct PyExperiment {
    inner: ExperimentBundle,
}

#[pymethods]
impl PyExperiment {
    #[getter]
    fn policy(&self) -> &'static str {
        self.inner.policy.as_str()
    }

    #[getter]
    fn average_expense(&self) -> f64 {
        self.inner.average_expense
    }

    fn __len__(&self) -> usize {
        self.inner.replications.len()
    }

    /// Per-round reports of replication `k`.
    fn reports<'py>(&self, py: Python<'py>, k: usize) -> PyResult<Bound<'py, PyAny>> {
        let rep = self
            .inner
            .replications
            .get(k)
            .ok_or_else(|| PyValueError::new_err(format!("no replication {k}")))?;
        to_py(py, &rep.reports)
    }

    fn imbalances(&self) -> Vec<f64> {
        self.inner.replications.iter().map(|r| r.imbalance).collect()
    }

    fn pooled_scores(&self) -> Vec<f64> {
        self.inner.pooled_scores()
    }

    fn aggregate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &aggregate(&self.inner))
    }

    /// Writes round tables, figures.csv and summary.json; returns the paths.
    fn write(&self, out_dir: PathBuf) -> PyResult<Vec<PathBuf>> {
        wcb_core::emit_outputs(&self.inner.config, std::slice::from_ref(&self.inner), None, &out_dir).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Experiment(policy={:?}, replications={})", self.policy(), self.inner.replications.len())
    }
}

#[pyfunction]
fn run_experiment(py: Python<'_>, config: &PyConfig) -> PyResult<PyExperiment> {
    let cfg = config.inner.clone();
    let inner = py.detach(move || wcb_core::run_experiment(&cfg)).map_err(err)?;
    Ok(PyExperiment { inner })
}

/// Runs every policy on paired arrivals. Returns the experiments and the
/// comparison (aggregates, pairwise ratios, band checks) as a dict.
#[pyfunction]
#[pyo3(signature = (config, out_dir = None))]
fn compare<'py>(
    py: Python<'py>,
    config: &PyConfig,
    out_dir: Option<PathBuf>,
) -> PyResult<(Vec<PyExperiment>, Bound<'py, PyAny>)> {
    let cfg = config.inner.clone();
    let (bundles, comparison) = py.detach(move || wcb_core::compare_policies(&cfg)).map_err(err)?;
    if let Some(dir) = out_dir {
        wcb_core::emit_outputs(&config.inner, &bundles, Some(&comparison), &dir).map_err(err)?;
    }
    let summary = to_py(py, &comparison)?;
    Ok((bundles.into_iter().map(|inner| PyExperiment { inner }).collect(), summary))
}

#[pyfunction]
#[pyo3(signature = (config, offset = 0.05))]
fn calibrate<'py>(py: Python<'py>, config: &PyConfig, offset: f64) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config.inner.clone();
    let c = py.detach(move || wcb_core::calibrate_threshold(&cfg, offset)).map_err(err)?;
    to_py(py, &c)
}

#[pyfunction]
fn threshold_from_pool<'py>(py: Python<'py>, scores: Vec<f64>, offset: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &wcb_core::threshold_from_pool(&scores, offset).map_err(err)?)
}

#[pyfunction]
fn aging_factor(alpha: f64, rounds_since_assignment: u32) -> PyResult<f64> {
    potential::aging_factor(alpha, rounds_since_assignment).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (alloc_success, alloc_participated, skill_count, catalog_size, aging_constant, rounds_since_assignment, previous_potential = 0.0))]
fn refresh_potential(
    alloc_success: u32,
    alloc_participated: u32,
    skill_count: usize,
    catalog_size: usize,
    aging_constant: f64,
    rounds_since_assignment: u32,
    previous_potential: f64,
) -> PyResult<(f64, f64)> {
    let inputs = potential::PotentialInputs {
        alloc_success,
        alloc_participated,
        skill_count,
        catalog_size,
        aging_constant,
        rounds_since_assignment,
        previous_potential,
    };
    let s = potential::sigma(&inputs).map_err(err)?;
    Ok((s, potential::refresh(&inputs).map_err(err)?))
}

#[pyfunction]
fn potential_init(sigma: f64) -> PyResult<f64> {
    potential::potential_init(sigma).map_err(err)
}

#[pyfunction]
fn potential_update(previous: f64, init: f64) -> PyResult<f64> {
    potential::potential_update(previous, init).map_err(err)
}

/// Dividend per recipient; everyone in `potentials` is paid unless
/// `recipients` narrows it.
#[pyfunction]
#[pyo3(signature = (balance, gamma, potentials, recipients = None))]
fn dividends(
    balance: f64,
    gamma: f64,
    potentials: BTreeMap<String, f64>,
    recipients: Option<BTreeSet<String>>,
) -> PyResult<BTreeMap<String, f64>> {
    let recipients = recipients.unwrap_or_else(|| potentials.keys().cloned().collect());
    let ctx = DividendContext::new(balance, gamma, potentials, recipients.clone()).map_err(err)?;
    recipients
        .into_iter()
        .map(|id| incentive::dividend(&id, &ctx).map(|d| (id, d)).map_err(err))
        .collect()
}

#[pyfunction]
fn satisfaction(
    previous_potential: f64,
    cohort_max_potential: f64,
    cumulative_income: f64,
    expense: f64,
    round: u32,
    omega: f64,
) -> PyResult<f64> {
    incentive::satisfaction(&SatisfactionInputs {
        previous_potential,
        cohort_max_potential,
        cumulative_income,
        expense,
        round,
        omega,
    })
    .map_err(err)
}

fn policy_kind(name: &str) -> PyResult<PolicyKind> {
    from_json_str(&format!("{name:?}"))
}

fn from_json_str<T: DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// One greedy assignment round. Tasks and volunteers are dicts with the
/// dataset field names; returns `{task_id: [(volunteer_id, pay), ...]}`.
#[pyfunction]
#[pyo3(signature = (tasks, volunteers, round = 1, policy = "cost_coverage", base = 0.0, slope = 0.0, weights = None))]
fn assign_round(
    tasks: &Bound<'_, PyAny>,
    volunteers: &Bound<'_, PyAny>,
    round: u32,
    policy: &str,
    base: f64,
    slope: f64,
    weights: Option<(f64, f64, f64)>,
) -> PyResult<BTreeMap<String, Vec<(String, f64)>>> {
    let tasks: Vec<Task> = from_py(tasks)?;
    let volunteers: Vec<Volunteer> = from_py(volunteers)?;
    let pay = RemunerationPolicy::new(policy_kind(policy)?, base, slope).map_err(err)?;
    let weights = match weights {
        Some((s, w, c)) => UtilityWeights::new(s, w, c).map_err(err)?,
        None => UtilityWeights::default(),
    };
    let map = wcb_core::assign_round(&tasks, &volunteers, &weights, &pay, round);
    Ok(map
        .iter()
        .map(|(t, picks)| {
            let picks = picks.iter().map(|a| (a.volunteer_id.clone(), a.remuneration)).collect();
            (t.clone(), picks)
        })
        .collect())
}

#[pymodule]
fn wcb(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyExperiment>()?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_from_pool, m)?)?;
    m.add_function(wrap_pyfunction!(aging_factor, m)?)?;
    m.add_function(wrap_pyfunction!(refresh_potential, m)?)?;
    m.add_function(wrap_pyfunction!(potential_init, m)?)?;
    m.add_function(wrap_pyfunction!(potential_update, m)?)?;
    m.add_function(wrap_pyfunction!(dividends, m)?)?;
    m.add_function(wrap_pyfunction!(satisfaction, m)?)?;
    m.add_function(wrap_pyfunction!(assign_round, m)?)?;
    Ok(())
}
