//! Python bindings. Structured results cross the boundary as JSON text or
//! plain dicts; the pure-Rust halves live in [`bridge`].

use std::sync::{Arc, Mutex};

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use conceptpref::envs::{EnvKind, EnvSpec, Environment};
use conceptpref::humansim::HumanAnswer;
use conceptpref::runner::{PendingQuery, Session};
use conceptpref::theory::{self, Strategy, TheoryParams};

pub mod bridge {
    //! JSON-in, JSON-out wrappers around the library.

    use std::sync::Arc;

    use conceptpref::domain::Choice;
    use conceptpref::envs::{EnvSpec, Environment};
    use conceptpref::runner::{run_experiment, run_session, start_session, BatchConfig, Session, SessionConfig};
    use conceptpref::theory::{validate_grid, GridSpec, Strategy};
    use conceptpref::{Error, Result};

    pub fn strategy(name: &str) -> Result<Strategy> {
        match name {
            "random" => Ok(Strategy::Random),
            "top" => Ok(Strategy::Top),
            "oaqs" => Ok(Strategy::Oaqs),
            other => Err(Error::Parse(format!("unknown strategy '{other}'"))),
        }
    }

    pub fn choice(name: &str) -> Result<Option<Choice>> {
        match name {
            "first" => Ok(Some(Choice::First)),
            "second" => Ok(Some(Choice::Second)),
            "skip" => Ok(None),
            other => Err(Error::Parse(format!("choice must be first, second or skip, got '{other}'"))),
        }
    }

    pub fn run_session_json(config: &str) -> Result<String> {
        let cfg: SessionConfig = serde_json::from_str(config)?;
        Ok(serde_json::to_string(&run_session(&cfg)?)?)
    }

    pub fn run_experiment_json(config: &str) -> Result<String> {
        let batch: BatchConfig = serde_json::from_str(config)?;
        Ok(serde_json::to_string(&run_experiment(&batch)?)?)
    }

    /// `grid` is `"default"` or a grid JSON document.
    pub fn validate_theory_json(grid: &str, trials: u64, seed: u64) -> Result<String> {
        let spec = if grid == "default" { GridSpec::default_grid() } else { serde_json::from_str(grid)? };
        Ok(serde_json::to_string(&validate_grid(&spec, trials, seed)?)?)
    }

    pub fn start_session_json(config: &str, instruction: Option<String>) -> Result<Session> {
        let cfg: SessionConfig = serde_json::from_str(config)?;
        let env = Arc::new(Environment::generate(&cfg.env)?);
        start_session(cfg, env, instruction)
    }

    pub fn environment(spec: &EnvSpec) -> Result<Environment> {
        Environment::generate(spec)
    }
}

fn err(e: conceptpref::Error) -> PyErr {
    use conceptpref::Error as E;
    match e {
        E::Oracle(_) | E::Io(_) | E::Initialization(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn params(aqsr: f64, y0: f64, y1: f64, k: usize, n_queries: usize) -> PyResult<TheoryParams> {
    TheoryParams::new(aqsr, y0, y1, k, n_queries).map_err(err)
}

/// Closed-form probability that `strategy` returns an answerable query.
#[pyfunction]
#[pyo3(signature = (strategy, aqsr, y0, y1, k, n_queries = 2000))]
fn qsr_closed_form(strategy: &str, aqsr: f64, y0: f64, y1: f64, k: usize, n_queries: usize) -> PyResult<f64> {
    theory::qsr_closed_form(bridge::strategy(strategy).map_err(err)?, &params(aqsr, y0, y1, k, n_queries)?).map_err(err)
}

/// Closed-form probability that `strategy` returns the best answerable query.
#[pyfunction]
#[pyo3(signature = (strategy, aqsr, y0, y1, k, n_queries = 2000))]
fn oqsr_closed_form(strategy: &str, aqsr: f64, y0: f64, y1: f64, k: usize, n_queries: usize) -> PyResult<f64> {
    theory::oqsr_closed_form(bridge::strategy(strategy).map_err(err)?, &params(aqsr, y0, y1, k, n_queries)?).map_err(err)
}

/// Simulated `(qsr, qsr_se, oqsr, oqsr_se)`.
#[pyfunction]
#[pyo3(signature = (strategy, aqsr, y0, y1, k, n_queries = 2000, trials = 100_000, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn monte_carlo_qsr(
    py: Python<'_>,
    strategy: &str,
    aqsr: f64,
    y0: f64,
    y1: f64,
    k: usize,
    n_queries: usize,
    trials: u64,
    seed: u64,
) -> PyResult<(f64, f64, f64, f64)> {
    let s: Strategy = bridge::strategy(strategy).map_err(err)?;
    let p = params(aqsr, y0, y1, k, n_queries)?;
    let mc = py.detach(|| theory::monte_carlo_qsr(s, &p, trials, seed)).map_err(err)?;
    Ok((mc.qsr.value, mc.qsr.std_error, mc.oqsr.value, mc.oqsr.std_error))
}

/// Bradley-Terry probability that the item with utility `u1` is preferred.
#[pyfunction]
fn bt_prob(u1: f64, u2: f64, beta: f64) -> f64 {
    conceptpref::inference::bt_prob_from_values(u1, u2, beta)
}

/// Runs a simulated session from a config JSON; returns the result as JSON.
#[pyfunction]
fn run_session(py: Python<'_>, config_json: &str) -> PyResult<String> {
    py.detach(|| bridge::run_session_json(config_json)).map_err(err)
}

/// Runs a batch config JSON; returns the experiment output as JSON.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_json: &str) -> PyResult<String> {
    py.detach(|| bridge::run_experiment_json(config_json)).map_err(err)
}

/// Validation report JSON for `"default"` or a grid JSON document.
#[pyfunction]
#[pyo3(signature = (grid = "default", trials = 100_000, seed = 0))]
fn validate_theory(py: Python<'_>, grid: &str, trials: u64, seed: u64) -> PyResult<String> {
    py.detach(|| bridge::validate_theory_json(grid, trials, seed)).map_err(err)
}

#[pyfunction]
fn builtin_templates(env: &str) -> PyResult<Vec<(String, String)>> {
    let kind: EnvKind = env.parse().map_err(err)?;
    Ok(conceptpref::humansim::builtin_templates(kind).into_iter().map(|t| (t.id, t.text)).collect())
}

/// A generated routing or grid environment.
#[pyclass(name = "Environment", frozen)]
struct PyEnvironment {
    inner: Environment,
}

#[pymethods]
impl PyEnvironment {
    #[new]
    #[pyo3(signature = (kind, seed = 0, pool_size = None))]
    fn new(kind: &str, seed: u64, pool_size: Option<usize>) -> PyResult<Self> {
        let kind: EnvKind = kind.parse().map_err(err)?;
        let spec = EnvSpec { kind, seed, n_nodes: None, pool_size };
        Ok(Self { inner: bridge::environment(&spec).map_err(err)? })
    }

    #[getter]
    fn concepts(&self) -> Vec<String> {
        self.inner.pool().catalog.names().map(str::to_owned).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.pool().len()
    }

    /// Trajectory id → feature vector.
    fn features(&self) -> Vec<(String, Vec<f64>)> {
        self.inner.pool().trajectories().iter().map(|t| (t.id.as_str().to_owned(), t.features.clone())).collect()
    }

    fn pool_json(&self) -> PyResult<String> {
        serde_json::to_string(self.inner.pool()).map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

/// An interactive session: call `next_query`, answer with `submit`, `stop`
/// when done.
#[pyclass(name = "Session", frozen)]
struct PySession {
    inner: Arc<Mutex<Session>>,
}

fn query_dict<'py>(py: Python<'py>, p: &PendingQuery) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("first", p.query.first.as_str())?;
    d.set_item("second", p.query.second.as_str())?;
    d.set_item("first_render", &p.first_render)?;
    d.set_item("second_render", &p.second_render)?;
    d.set_item("rank", p.rank)?;
    d.set_item("oracle_calls", p.oracle_calls)?;
    d.set_item("approved", p.approved)?;
    Ok(d)
}

impl PySession {
    fn lock(&self) -> PyResult<std::sync::MutexGuard<'_, Session>> {
        self.inner.lock().map_err(|_| PyRuntimeError::new_err("session lock poisoned"))
    }
}

#[pymethods]
impl PySession {
    /// `config_json` is a session config; give `instruction` unless it names
    /// an `instruction_id`.
    #[new]
    #[pyo3(signature = (config_json, instruction = None))]
    fn new(py: Python<'_>, config_json: &str, instruction: Option<String>) -> PyResult<Self> {
        let s = py.detach(|| bridge::start_session_json(config_json, instruction)).map_err(err)?;
        Ok(Self { inner: Arc::new(Mutex::new(s)) })
    }

    #[getter]
    fn phase(&self) -> PyResult<String> {
        let p = self.lock()?.phase();
        Ok(serde_json::to_value(p).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default())
    }

    #[getter]
    fn iteration(&self) -> PyResult<usize> {
        Ok(self.lock()?.iteration())
    }

    fn next_query<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let p = py.detach(|| self.lock().and_then(|mut s| s.next_query().map_err(err)))?;
        query_dict(py, &p)
    }

    /// Returns the posterior summary: `map`, `mean`, `sd`, `acceptance_rate`.
    #[pyo3(signature = (choice, explanation = None, difficulty = None))]
    fn submit<'py>(
        &self,
        py: Python<'py>,
        choice: &str,
        explanation: Option<String>,
        difficulty: Option<String>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let answer = HumanAnswer { choice: bridge::choice(choice).map_err(err)?, explanation, difficulty };
        let s = py.detach(|| self.lock().and_then(|mut s| s.submit(answer).map_err(err)))?;
        let d = PyDict::new(py);
        d.set_item("map", s.map)?;
        d.set_item("mean", s.mean)?;
        d.set_item("sd", s.sd)?;
        d.set_item("acceptance_rate", s.acceptance_rate)?;
        Ok(d)
    }

    /// Final result as JSON; idempotent.
    fn stop(&self) -> PyResult<String> {
        let r = self.lock()?.stop().map_err(err)?;
        serde_json::to_string(&r).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn state_json(&self) -> PyResult<String> {
        serde_json::to_string(self.lock()?.state()).map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

#[pymodule]
fn conceptpref_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(qsr_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(oqsr_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_qsr, m)?)?;
    m.add_function(wrap_pyfunction!(bt_prob, m)?)?;
    m.add_function(wrap_pyfunction!(run_session, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(validate_theory, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_templates, m)?)?;
    m.add_class::<PyEnvironment>()?;
    m.add_class::<PySession>()?;
    Ok(())
}
