//! Python bindings. Structured results come back as plain dicts and lists.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use symq_core::gaussian::{self, MultiGaussian};
use symq_core::moments::{self, ModelChoice, MomentKind};
use symq_core::projection::{self, Triple};
use symq_core::states::{self, Prepared, RawSpec};

fn err(e: symq_core::Error) -> PyErr {
    PyValueError::new_err(format!("{}: {e}", e.kind()))
}

/// Round-trips a serializable value through Python's json module.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_kind(kind: &str) -> PyResult<MomentKind> {
    match kind {
        "raw" => Ok(MomentKind::Raw),
        "central" => Ok(MomentKind::Central),
        other => Err(PyValueError::new_err(format!("kind must be 'raw' or 'central', got '{other}'"))),
    }
}

fn parse_model(model: &str) -> PyResult<ModelChoice> {
    match model {
        "single" => Ok(ModelChoice::Single),
        "ghz-pair" | "ghz_pair" => Ok(ModelChoice::GhzPair),
        other => Err(PyValueError::new_err(format!("model must be 'single' or 'ghz-pair', got '{other}'"))),
    }
}

/// A state family at a fixed qubit count, e.g. `StateSpec("dcs", 8, mu="10000000")`.
#[pyclass(name = "StateSpec", frozen, module = "symq", skip_from_py_object)]
#[derive(Clone)]
struct PyStateSpec {
    inner: states::StateSpec,
}

#[pymethods]
impl PyStateSpec {
    #[new]
    #[pyo3(signature = (family, n, **params))]
    fn new(py: Python<'_>, family: String, n: usize, params: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let params = match params {
            Some(d) => {
                let text: String = py.import("json")?.call_method1("dumps", (d,))?.extract()?;
                serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?
            }
            None => Default::default(),
        };
        let inner = states::StateSpec::try_from(RawSpec { family, n, params }).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Same family at another N; patterns keep their weight fractions.
    fn with_n(&self, n: usize) -> PyResult<Self> {
        Ok(Self { inner: self.inner.with_n(n).map_err(err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family().name()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label()
    }

    fn is_permutation_symmetric(&self) -> bool {
        self.inner.is_permutation_symmetric()
    }

    fn __repr__(&self) -> String {
        format!("StateSpec({})", self.inner.label())
    }
}

/// Q̃ over the (m, n, k) lattice.
#[pyclass(name = "ProjectedQ", frozen, module = "symq")]
struct PyProjectedQ {
    inner: projection::ProjectedQ,
}

#[pymethods]
impl PyProjectedQ {
    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn triples(&self) -> Vec<(usize, usize, usize)> {
        self.inner.iter_ln().map(|(t, _)| (t.m, t.n, t.k)).collect()
    }

    /// Scaled coordinates (m/N, k/N, n/N) per lattice point.
    fn points(&self) -> Vec<[f64; 3]> {
        let n = self.inner.n_qubits();
        self.inner.iter_ln().map(|(t, _)| t.scaled(n)).collect()
    }

    fn ln_values(&self) -> Vec<f64> {
        self.inner.iter_ln().map(|(_, v)| v).collect()
    }

    fn values(&self) -> Vec<f64> {
        self.inner.iter().map(|(_, v)| v).collect()
    }

    fn value(&self, m: usize, n: usize, k: usize) -> Option<f64> {
        self.inner.value(Triple::new(m, n, k))
    }

    fn total(&self) -> f64 {
        self.inner.total()
    }

    fn to_xyz(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_xyz(&mut buf).map_err(err)?;
        String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn peaks<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &gaussian::find_peaks(&self.inner))
    }
}

/// Projected Q̃ from closed forms, or by binning the brute-force grid.
#[pyfunction]
#[pyo3(signature = (spec, bruteforce = false, nmax_brute = states::DEFAULT_NMAX_BRUTE))]
fn project(spec: &PyStateSpec, bruteforce: bool, nmax_brute: usize) -> PyResult<PyProjectedQ> {
    let inner = if bruteforce {
        let state = states::build_state(&spec.inner, nmax_brute).map_err(err)?;
        projection::project_bruteforce(&state, nmax_brute, &spec.inner.label()).map_err(err)?
    } else {
        projection::project_analytic(&spec.inner).map_err(err)?
    };
    Ok(PyProjectedQ { inner })
}

/// Dense amplitudes of a pure state (mixtures are rejected).
#[pyfunction]
#[pyo3(signature = (spec, nmax_brute = states::DEFAULT_NMAX_BRUTE))]
fn amplitudes(spec: &PyStateSpec, nmax_brute: usize) -> PyResult<Vec<Complex64>> {
    match states::build_state(&spec.inner, nmax_brute).map_err(err)? {
        Prepared::Pure(v) => Ok(v.amplitudes().to_vec()),
        Prepared::Mixed(_) => Err(PyValueError::new_err("state is a mixture; it has no single amplitude vector")),
    }
}

/// ln R_mnk, the log number of phase-space points with weights (m, n, k).
#[pyfunction]
fn ln_r_mnk(n_qubits: usize, m: usize, n: usize, k: usize) -> f64 {
    projection::r_mnk(n_qubits, Triple::new(m, n, k))
}

/// Center, dispersion T and eigen-structure of the Gaussian model(s).
#[pyfunction]
#[pyo3(signature = (spec, model = "single", nmax_brute = states::DEFAULT_NMAX_BRUTE))]
fn gaussian_model<'py>(
    py: Python<'py>,
    spec: &PyStateSpec,
    model: &str,
    nmax_brute: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let mix: MultiGaussian = moments::build_model(&spec.inner, parse_model(model)?, nmax_brute).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("moments", to_py(py, &gaussian::moment_summary(&spec.inner, nmax_brute).map_err(err)?)?)?;
    let comps = mix
        .components()
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("weight", c.weight())?;
            d.set_item("center", c.center())?;
            d.set_item("dispersion", c.dispersion())?;
            d.set_item("trace", c.trace())?;
            d.set_item("det", c.det())?;
            d.set_item("eigen", to_py(py, &c.eigen())?)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    out.set_item("components", comps)?;
    Ok(out.into_any())
}

/// Exact ⟨(S·d)^r⟩, or its Gaussian estimate when `approx` is set.
#[pyfunction]
#[pyo3(signature = (spec, direction, order, kind = "raw", approx = false, model = "single", nmax_brute = states::DEFAULT_NMAX_BRUTE))]
fn moment(
    spec: &PyStateSpec,
    direction: [f64; 3],
    order: usize,
    kind: &str,
    approx: bool,
    model: &str,
    nmax_brute: usize,
) -> PyResult<f64> {
    let kind = parse_kind(kind)?;
    if approx {
        let mix = moments::build_model(&spec.inner, parse_model(model)?, nmax_brute).map_err(err)?;
        moments::approx_moment_gaussian(&mix, &direction, order, kind).map_err(err)
    } else {
        moments::exact_moment(&spec.inner, &direction, order, kind, nmax_brute).map_err(err)
    }
}

/// Exact vs approximate moment with deviation and cumulants.
#[pyfunction]
#[pyo3(signature = (spec, direction, order, kind = "raw", model = "single", nmax_brute = states::DEFAULT_NMAX_BRUTE))]
fn moment_report<'py>(
    py: Python<'py>,
    spec: &PyStateSpec,
    direction: [f64; 3],
    order: usize,
    kind: &str,
    model: &str,
    nmax_brute: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let rep = moments::moment_report(&spec.inner, &direction, order, parse_kind(kind)?, parse_model(model)?, nmax_brute)
        .map_err(err)?;
    to_py(py, &rep)
}

/// Localization verdict from an increasing N-sweep.
#[pyfunction]
#[pyo3(signature = (spec, ns, epsilon = gaussian::DEFAULT_EPSILON, nmax_brute = states::DEFAULT_NMAX_BRUTE))]
fn localize<'py>(
    py: Python<'py>,
    spec: &PyStateSpec,
    ns: Vec<usize>,
    epsilon: f64,
    nmax_brute: usize,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &gaussian::classify_localization(&spec.inner, &ns, epsilon, nmax_brute).map_err(err)?)
}

#[pymodule]
fn symq(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStateSpec>()?;
    m.add_class::<PyProjectedQ>()?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(amplitudes, m)?)?;
    m.add_function(wrap_pyfunction!(ln_r_mnk, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_model, m)?)?;
    m.add_function(wrap_pyfunction!(moment, m)?)?;
    m.add_function(wrap_pyfunction!(moment_report, m)?)?;
    m.add_function(wrap_pyfunction!(localize, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
