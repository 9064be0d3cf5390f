//! Python bindings: distributions, half-line data, ladder laws and the
//! reconstruction dispatcher.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyAny;
use whlab_core::factor::{self, Side};
use whlab_core::reconstruct::{self, Detector};
use whlab_core::{lattice, montecarlo, families};

create_exception!(whlab, WhlabError, PyException, "Error raised by the whlab core library.");

fn err(e: whlab_core::Error) -> PyErr {
    WhlabError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = whlab_core::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

/// Parses a JSON document into Python objects.
fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| WhlabError::new_err(e.to_string()))?;
    json_to_py(py, &text)
}

/// A finite measure on the integers.
#[pyclass(name = "LatticeDist", module = "whlab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLatticeDist(lattice::LatticeDist);

#[pymethods]
impl PyLatticeDist {
    #[new]
    #[pyo3(signature = (offset, weights, truncated_mass = 0.0))]
    fn new(offset: i64, weights: Vec<f64>, truncated_mass: f64) -> PyResult<Self> {
        let d = lattice::LatticeDist::new(offset, weights)
            .and_then(|d| d.with_truncated_mass(truncated_mass))
            .map_err(err)?;
        Ok(Self(d))
    }

    #[staticmethod]
    fn from_pairs(pairs: Vec<(i64, f64)>) -> PyResult<Self> {
        lattice::LatticeDist::from_pairs(&pairs).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(Self)
            .map_err(|e| WhlabError::new_err(e.to_string()))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| WhlabError::new_err(e.to_string()))
    }

    #[getter]
    fn offset(&self) -> i64 {
        self.0.offset()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.0.weights().to_vec()
    }

    #[getter]
    fn truncated_mass(&self) -> f64 {
        self.0.truncated_mass()
    }

    fn total(&self) -> f64 {
        self.0.total()
    }

    fn mass(&self, k: i64) -> f64 {
        self.0.mass(k)
    }

    fn mean(&self) -> f64 {
        self.0.first_moment()
    }

    fn convolve(&self, other: &PyLatticeDist) -> PyResult<Self> {
        lattice::convolve(&self.0, &other.0).map(Self).map_err(err)
    }

    fn power(&self, n: u32) -> PyResult<Self> {
        lattice::convolution_power(&self.0, n).map(Self).map_err(err)
    }

    fn restrict_nonneg(&self) -> Self {
        Self(lattice::restrict_nonneg(&self.0))
    }

    fn tv_distance(&self, other: &PyLatticeDist) -> f64 {
        self.0.tv_distance(&other.0)
    }

    /// `kind` is "characteristic", "mgf" or "generating".
    fn transform(&self, kind: &str, argument: f64) -> PyResult<Complex64> {
        let kind = match kind {
            "characteristic" => lattice::TransformKind::Characteristic,
            "mgf" => lattice::TransformKind::Mgf,
            "generating" => lattice::TransformKind::Generating,
            other => return Err(WhlabError::new_err(format!("unknown transform {other:?}"))),
        };
        Ok(lattice::eval_transform(&self.0, kind, argument).value)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "LatticeDist(offset={}, len={}, total={:.17})",
            self.0.offset(),
            self.0.len(),
            self.0.total()
        )
    }
}

/// Restrictions of the first `horizon` convolution powers to `[0, ∞)`.
#[pyclass(name = "TruncatedData", module = "whlab", frozen)]
struct PyTruncatedData(whlab_core::TruncatedData);

#[pymethods]
impl PyTruncatedData {
    #[staticmethod]
    fn from_distribution(mu: &PyLatticeDist, horizon: u32) -> PyResult<Self> {
        whlab_core::TruncatedData::from_distribution(&mu.0, horizon)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn read_dir(path: PathBuf) -> PyResult<Self> {
        whlab_core::TruncatedData::read_dir(&path).map(Self).map_err(err)
    }

    fn write_dir(&self, path: PathBuf) -> PyResult<()> {
        self.0.write_dir(&path).map_err(err)
    }

    #[getter]
    fn horizon(&self) -> u32 {
        self.0.horizon()
    }

    /// `μ*ⁿ` restricted to `[0, ∞)`, for `1 ≤ n ≤ horizon`.
    fn restricted(&self, n: u32) -> PyResult<PyLatticeDist> {
        if n == 0 || n > self.0.horizon() {
            return Err(WhlabError::new_err(format!("n = {n} outside 1..={}", self.0.horizon())));
        }
        Ok(PyLatticeDist(self.0.restricted(n).clone()))
    }

    fn extend_by_negative(&self, nu: &PyLatticeDist) -> PyResult<Self> {
        reconstruct::extend_by_negative(&self.0, &nu.0).map(Self).map_err(err)
    }
}

/// Joint law of the first ladder epoch and height.
#[pyclass(name = "LadderLaw", module = "whlab", frozen)]
struct PyLadderLaw(factor::LadderLaw);

#[pymethods]
impl PyLadderLaw {
    #[getter]
    fn horizon(&self) -> u32 {
        self.0.horizon()
    }

    fn mass(&self, n: u32, k: i64) -> f64 {
        self.0.mass(n, k)
    }

    fn marginal(&self, n: u32) -> PyResult<f64> {
        if n == 0 || n > self.0.horizon() {
            return Err(WhlabError::new_err(format!("n = {n} outside 1..={}", self.0.horizon())));
        }
        Ok(self.0.marginal(n))
    }

    fn total(&self) -> f64 {
        self.0.total()
    }

    fn alive_after(&self, n: u32) -> PyResult<f64> {
        if n > self.0.horizon() {
            return Err(WhlabError::new_err(format!("n = {n} beyond horizon {}", self.0.horizon())));
        }
        Ok(self.0.alive_after(n))
    }

    /// Nonzero cells as `(n, k, mass)` tuples.
    fn cells(&self) -> Vec<(u32, i64, f64)> {
        self.0.cells().collect()
    }
}

/// `side` is "upward" or "downward".
#[pyfunction]
fn ladder_law(mu: &PyLatticeDist, side: &str, horizon: u32) -> PyResult<PyLadderLaw> {
    factor::ladder_law(&mu.0, parse::<Side>(side)?, horizon)
        .map(PyLadderLaw)
        .map_err(err)
}

/// Returns `(value, bound)`.
#[pyfunction]
fn chi_eval(law: &PyLadderLaw, s: Complex64, t: f64) -> PyResult<(Complex64, f64)> {
    factor::chi_eval(&law.0, s, t).map(|v| (v.value, v.bound)).map_err(err)
}

/// Returns `(value, bound)`.
#[pyfunction]
fn spitzer_chi(data: &PyTruncatedData, s: Complex64, t: f64) -> PyResult<(Complex64, f64)> {
    factor::spitzer_chi(&data.0, s, t).map(|v| (v.value, v.bound)).map_err(err)
}

/// Factorization residuals over an `(s, t)` grid, as a dict.
#[pyfunction]
fn verify_factorization<'py>(
    py: Python<'py>,
    mu: &PyLatticeDist,
    s_values: Vec<f64>,
    t_values: Vec<f64>,
    horizon: u32,
) -> PyResult<Bound<'py, PyAny>> {
    let report = factor::verify_factorization(&mu.0, &s_values, &t_values, horizon).map_err(err)?;
    to_py(py, &report)
}

/// Runs the detectors in dispatch order and returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (data, detectors = None, truth = None))]
fn auto_reconstruct<'py>(
    py: Python<'py>,
    data: &PyTruncatedData,
    detectors: Option<Vec<String>>,
    truth: Option<&PyLatticeDist>,
) -> PyResult<Bound<'py, PyAny>> {
    let enabled = match detectors {
        Some(names) => names.iter().map(|n| parse::<Detector>(n)).collect::<PyResult<Vec<_>>>()?,
        None => Detector::ALL.to_vec(),
    };
    let mut report = reconstruct::auto_reconstruct_with(&data.0, &enabled);
    if let Some(mu) = truth {
        report = report.with_truth(&mu.0);
    }
    to_py(py, &report)
}

/// Simulated ladder tallies compared against the exact law, as a dict.
#[pyfunction]
#[pyo3(signature = (mu, side, n_samples, max_steps, seed))]
fn simulate<'py>(
    py: Python<'py>,
    mu: &PyLatticeDist,
    side: &str,
    n_samples: u64,
    max_steps: u32,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let side = parse::<Side>(side)?;
    let cmp = py
        .detach(|| {
            let emp = montecarlo::sample_ladder(&mu.0, side, n_samples, max_steps, seed)?;
            let exact = factor::ladder_law(&mu.0, side, max_steps)?;
            montecarlo::compare_empirical(&exact, &emp)
        })
        .map_err(err)?;
    to_py(py, &cmp)
}

#[pyfunction]
fn cubic_tail_example(cutoff: i64) -> PyResult<PyLatticeDist> {
    families::cubic_tail_example(cutoff).map(PyLatticeDist).map_err(err)
}

#[pyfunction]
fn two_point(left: i64, right: i64, p_left: f64) -> PyResult<PyLatticeDist> {
    families::two_point(left, right, p_left).map(PyLatticeDist).map_err(err)
}

#[pymodule]
fn whlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("WhlabError", m.py().get_type::<WhlabError>())?;
    m.add_class::<PyLatticeDist>()?;
    m.add_class::<PyTruncatedData>()?;
    m.add_class::<PyLadderLaw>()?;
    m.add_function(wrap_pyfunction!(ladder_law, m)?)?;
    m.add_function(wrap_pyfunction!(chi_eval, m)?)?;
    m.add_function(wrap_pyfunction!(spitzer_chi, m)?)?;
    m.add_function(wrap_pyfunction!(verify_factorization, m)?)?;
    m.add_function(wrap_pyfunction!(auto_reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(cubic_tail_example, m)?)?;
    m.add_function(wrap_pyfunction!(two_point, m)?)?;
    Ok(())
}
