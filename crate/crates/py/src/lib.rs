//! Python bindings: `import qubitmech_py`.

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList, PyString};
use serde_json::Value;

use qubitmech::eigensolve::Spectrum;
use qubitmech::mechanics;
use qubitmech::observables;
use qubitmech::params::{FluxoniumParams, TransmonParams};
use qubitmech::pipeline::{self, Config};

fn py_err(e: qubitmech::Error) -> PyErr {
    let msg = format!("{}: {e}", e.code());
    match e {
        qubitmech::Error::Io(_) => PyIOError::new_err(msg),
        e if e.is_config_error() => PyValueError::new_err(msg),
        _ => PyRuntimeError::new_err(msg),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(a) => PyList::new(py, a.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?)?.into_any(),
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

/// Accepts a JSON string or any object `json.dumps` can serialize.
fn document(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    let text: String = match obj.cast::<PyString>() {
        Ok(s) => s.to_str()?.to_owned(),
        Err(_) => obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?,
    };
    pipeline::parse_json(&text).map_err(py_err)
}

fn config(obj: &Bound<'_, PyAny>) -> PyResult<Config> {
    pipeline::config_from_value(&document(obj)?).map_err(py_err)
}

/// Lowest levels of a circuit with their states.
#[pyclass(name = "Spectrum", module = "qubitmech_py", frozen)]
struct PySpectrum {
    inner: Spectrum,
}

#[pymethods]
impl PySpectrum {
    /// Energies in GHz, ascending.
    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.inner.energies().to_vec()
    }

    #[getter]
    fn residual_bound(&self) -> f64 {
        self.inner.residual_bound()
    }

    #[getter]
    fn basis(&self) -> &'static str {
        self.inner.basis().name()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.basis().dim()
    }

    /// State `i` sampled on the basis, normalized in the basis inner product.
    fn state(&self, i: usize) -> PyResult<Vec<Complex64>> {
        if i >= self.inner.len() {
            return Err(PyValueError::new_err(format!("level {i} out of range 0..{}", self.inner.len())));
        }
        Ok(self.inner.state(i).to_vec())
    }

    fn transition(&self, i: usize, j: usize) -> PyResult<f64> {
        observables::transition(&self.inner, i, j).map_err(py_err)
    }

    fn disjointness(&self, i: usize, j: usize) -> PyResult<f64> {
        observables::disjointness(&self.inner, i, j).map_err(py_err)
    }

    /// `"even"`, `"odd"` or `None`.
    fn parity(&self, level: usize) -> Option<&'static str> {
        match observables::parity_classify(&self.inner, level) {
            observables::Parity::Even => Some("even"),
            observables::Parity::Odd => Some("odd"),
            observables::Parity::None => None,
        }
    }

    /// Qubit summary as a dict; absent observables are `None`.
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = observables::qubit_report(&self.inner).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("f10", r.f10)?;
        d.set_item("f21", r.f21)?;
        d.set_item("anharmonicity", r.anharmonicity)?;
        d.set_item("flux_mat_el", r.flux_mat_el)?;
        d.set_item("charge_mat_el", r.charge_mat_el)?;
        d.set_item("disjointness", r.disjointness)?;
        Ok(d)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Spectrum(basis={}, energies={:?})", self.inner.basis().name(), self.inner.energies())
    }
}

/// Solves the single point described by a config (dict or JSON string).
#[pyfunction]
fn solve(py: Python<'_>, config_doc: &Bound<'_, PyAny>) -> PyResult<PySpectrum> {
    let c = config(config_doc)?;
    let inner = py.detach(|| c.solve()).map_err(py_err)?;
    Ok(PySpectrum { inner })
}

/// Runs the config's sweep; returns one dict per point in swept order.
#[pyfunction]
#[pyo3(signature = (config_doc, threads = 0))]
fn sweep<'py>(py: Python<'py>, config_doc: &Bound<'py, PyAny>, threads: usize) -> PyResult<Bound<'py, PyList>> {
    let c = config(config_doc)?;
    let r = py.detach(|| pipeline::run_sweep_with_threads(&c, threads)).map_err(py_err)?;
    let rows = PyList::empty(py);
    for rec in &r.records {
        let d = PyDict::new(py);
        d.set_item(r.swept_name.as_str(), rec.swept_value)?;
        d.set_item("energies", rec.energies.clone())?;
        d.set_item("f10", rec.f10)?;
        d.set_item("flux_mat_el", rec.flux_mat_el)?;
        d.set_item("charge_mat_el", rec.charge_mat_el)?;
        d.set_item("disjointness", rec.disjointness)?;
        d.set_item("error", rec.error.clone())?;
        rows.append(d)?;
    }
    Ok(rows)
}

/// Runs the config's sweep and writes the CSV plus its metadata sidecar.
#[pyfunction]
#[pyo3(signature = (config_doc, path, threads = 0))]
fn sweep_to_csv(
    py: Python<'_>,
    config_doc: &Bound<'_, PyAny>,
    path: std::path::PathBuf,
    threads: usize,
) -> PyResult<usize> {
    let c = config(config_doc)?;
    py.detach(|| {
        let r = pipeline::run_sweep_with_threads(&c, threads)?;
        pipeline::write_csv(&r, &path)?;
        Ok(r.failures())
    })
    .map_err(py_err)
}

/// Peak-to-peak variation of a transmon level over one offset-charge period.
#[pyfunction]
#[pyo3(signature = (e_c, e_j, level = 0, n_max = 30))]
fn charge_dispersion(e_c: f64, e_j: f64, level: usize, n_max: usize) -> PyResult<f64> {
    let p = TransmonParams { e_c, e_j, n_g: 0.0, phi_ext: 0.0 };
    observables::charge_dispersion(&p, level, n_max).map_err(py_err)
}

/// Energy difference of the two lowest stable classical equilibria.
#[pyfunction]
fn classical_splitting(e_c: f64, e_l: f64, e_j: f64, phi_ext: f64) -> PyResult<f64> {
    mechanics::classical_splitting(&FluxoniumParams { e_c, e_l, e_j, phi_ext }).map_err(py_err)
}

fn typed<T: serde::de::DeserializeOwned>(v: Value) -> PyResult<T> {
    serde_json::from_value(v).map_err(|e| PyValueError::new_err(format!("SchemaError: {e}")))
}

fn unknown(circuit: &str) -> PyErr {
    PyValueError::new_err(format!("unknown circuit `{circuit}` (transmon, fluxonium, zeropi)"))
}

/// Electrical parameters to the mechanical analog; `length` is `L` (or
/// the half length `l` for the fluxonium).
#[pyfunction]
fn map_e2m<'py>(circuit: &str, params: &Bound<'py, PyAny>, length: f64) -> PyResult<Bound<'py, PyAny>> {
    let py = params.py();
    let doc = document(params)?;
    let out = match circuit {
        "transmon" => serde_json::to_value(mechanics::transmon_e2m(&typed(doc)?, length).map_err(py_err)?),
        "fluxonium" => serde_json::to_value(mechanics::fluxonium_e2m(&typed(doc)?, length).map_err(py_err)?),
        "zeropi" => serde_json::to_value(mechanics::zeropi_e2m(&typed(doc)?, length).map_err(py_err)?),
        c => return Err(unknown(c)),
    };
    to_py(py, &out.map_err(|e| PyRuntimeError::new_err(e.to_string()))?)
}

/// Mechanical parameters back to the electrical circuit.
#[pyfunction]
fn map_m2e<'py>(circuit: &str, mech: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let py = mech.py();
    let doc = document(mech)?;
    let out = match circuit {
        "transmon" => serde_json::to_value(mechanics::transmon_m2e(&typed(doc)?).map_err(py_err)?),
        "fluxonium" => serde_json::to_value(mechanics::fluxonium_m2e(&typed(doc)?).map_err(py_err)?),
        "zeropi" => serde_json::to_value(mechanics::zeropi_m2e(&typed(doc)?).map_err(py_err)?),
        c => return Err(unknown(c)),
    };
    to_py(py, &out.map_err(|e| PyRuntimeError::new_err(e.to_string()))?)
}

/// Runs the built-in invariant suite; returns `(all_passed, report)`.
#[pyfunction]
fn check(py: Python<'_>) -> (bool, String) {
    let r = py.detach(qubitmech::selfcheck::run_checks);
    (r.all_passed(), r.render())
}

#[pymodule]
pub fn qubitmech_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpectrum>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_to_csv, m)?)?;
    m.add_function(wrap_pyfunction!(charge_dispersion, m)?)?;
    m.add_function(wrap_pyfunction!(classical_splitting, m)?)?;
    m.add_function(wrap_pyfunction!(map_e2m, m)?)?;
    m.add_function(wrap_pyfunction!(map_m2e, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
