//! Python bindings. Reports come back as JSON strings in the same format the
//! CLI writes, so `json.loads` gives the CLI's `report.json` structure.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use thingap::cli::{self, Config};
use thingap::geometry::GapGeometry;
use thingap::verify;

fn err(e: thingap::Error) -> PyErr {
    match e {
        thingap::Error::Config(_) => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Defaults overridden by `overrides`, whose values are converted with `str()`.
fn config(overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Config> {
    let mut cfg = Config::default();
    if let Some(d) = overrides {
        for (k, v) in d.iter() {
            let key: String = k.extract()?;
            let value = v.str()?.to_string();
            cfg.set(&key, &value).map_err(err)?;
        }
    }
    Ok(cfg)
}

fn json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    cli::to_json(v).map_err(err)
}

#[pyclass(name = "GapGeometry", frozen)]
struct PyGapGeometry(GapGeometry);

#[pymethods]
impl PyGapGeometry {
    /// Power-law gap in two dimensions: top `ε/2 + c1|x'|^{1+γ}`, bottom `-ε/2 + c2|x'|^{1+γ}`.
    #[new]
    #[pyo3(signature = (epsilon, gamma = 0.5, c1 = 1.0, c2 = -1.0))]
    fn new(epsilon: f64, gamma: f64, c1: f64, c2: f64) -> PyResult<Self> {
        GapGeometry::power(epsilon, gamma, 2, c1, c2).map(Self).map_err(err)
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon()
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma()
    }

    fn delta(&self, xp: f64) -> PyResult<f64> {
        self.0.delta(&[xp]).map_err(err)
    }

    fn top(&self, xp: f64) -> f64 {
        self.0.top_height(&[xp])
    }

    fn bottom(&self, xp: f64) -> f64 {
        self.0.bottom_height(&[xp])
    }

    fn contains(&self, r: f64, x: (f64, f64)) -> bool {
        self.0.contains(r, &[x.0, x.1])
    }

    fn bar_u(&self, x: (f64, f64)) -> PyResult<f64> {
        thingap::auxiliary::bar_u(&self.0, &[x.0, x.1]).map_err(err)
    }

    fn grad_bar_u(&self, x: (f64, f64)) -> PyResult<Vec<f64>> {
        thingap::auxiliary::grad_bar_u(&self.0, &[x.0, x.1]).map_err(err)
    }

    /// Invariant report as JSON.
    #[pyo3(signature = (samples = 1000))]
    fn check_invariants(&self, samples: usize) -> PyResult<String> {
        json(&self.0.check_invariants(samples))
    }

    fn __repr__(&self) -> String {
        format!("GapGeometry(epsilon={}, gamma={})", self.0.epsilon(), self.0.gamma())
    }
}

/// `(key, default, meaning)` for every configuration key.
#[pyfunction]
fn config_keys() -> Vec<(&'static str, &'static str, &'static str)> {
    cli::KEYS.to_vec()
}

/// Full configuration text after applying `overrides`.
#[pyfunction]
#[pyo3(signature = (overrides = None))]
fn config_text(overrides: Option<&Bound<'_, PyDict>>) -> PyResult<String> {
    Ok(config(overrides)?.to_text())
}

/// Blow-up sweep; returns the `report.json` content.
#[pyfunction]
#[pyo3(signature = (overrides = None))]
fn sweep(py: Python<'_>, overrides: Option<&Bound<'_, PyDict>>) -> PyResult<String> {
    let plan = config(overrides)?.plan().map_err(err)?;
    let out = py
        .detach(|| verify::run_sweep(&plan).and_then(cli::sweep_output))
        .map_err(err)?;
    json(&out)
}

#[pyfunction]
#[pyo3(signature = (overrides = None))]
fn energy_scaling(py: Python<'_>, overrides: Option<&Bound<'_, PyDict>>) -> PyResult<String> {
    let cfg = config(overrides)?;
    let plan = cfg.plan().map_err(err)?;
    let zs = cfg.f64_list("energy.z_primes").map_err(err)?;
    let r = py.detach(|| verify::check_energy_scaling(&plan, &zs)).map_err(err)?;
    json(&r)
}

#[pyfunction]
#[pyo3(signature = (overrides = None))]
fn prop21(py: Python<'_>, overrides: Option<&Bound<'_, PyDict>>) -> PyResult<String> {
    let cfg = config(overrides)?;
    let plan = cfg.plan().map_err(err)?;
    let (fractions, pcfg) = cfg.prop21().map_err(err)?;
    let r = py.detach(|| verify::run_prop21_sweep(&plan, &fractions, &pcfg)).map_err(err)?;
    json(&r)
}

#[pyfunction]
#[pyo3(signature = (seed = 0))]
fn oracle_suite(py: Python<'_>, seed: u64) -> PyResult<String> {
    let r = py.detach(|| verify::oracle_suite(seed)).map_err(err)?;
    json(&r)
}

/// Exact affine-solution check at `epsilon`.
#[pyfunction]
#[pyo3(signature = (epsilon = 0.1))]
fn check_affine(py: Python<'_>, epsilon: f64) -> PyResult<String> {
    let r = py.detach(|| verify::check_affine(epsilon)).map_err(err)?;
    json(&r)
}

/// Runs the command line with `args` (without the program name); returns the exit code.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> i32 {
    py.detach(|| cli::run(std::iter::once("thingap".to_string()).chain(args)))
}

#[pymodule]
fn thingap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGapGeometry>()?;
    m.add_function(wrap_pyfunction!(config_keys, m)?)?;
    m.add_function(wrap_pyfunction!(config_text, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(energy_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(prop21, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_suite, m)?)?;
    m.add_function(wrap_pyfunction!(check_affine, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
