//! Python bindings. Reports come back as plain dicts and lists.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use qfilter::control::{preset, PresetParams};
use qfilter::fidelity::{error_sweep, SweepConfig};
use qfilter::filters::{f1, f2_terms};

fn err(e: qfilter::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => {
            let items = a.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn serialized<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// Piecewise-constant control sequence.
#[pyclass(name = "ControlSequence", module = "qfilter_py", frozen)]
struct PySequence(qfilter::ControlSequence);

#[pymethods]
impl PySequence {
    /// Build from `[(axis, rate, duration), ...]` with axis one of "x", "y", "z", "i".
    #[new]
    fn new(segments: Vec<(String, f64, f64)>) -> PyResult<Self> {
        let segs = segments
            .into_iter()
            .map(|(axis, rate, duration)| {
                let axis: qfilter::Axis = serde_json::from_value(serde_json::Value::String(axis))
                    .map_err(|e| PyValueError::new_err(format!("bad axis: {e}")))?;
                qfilter::ControlSegment::new(axis, rate, duration).map_err(err)
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(PySequence(qfilter::ControlSequence::new(segs).map_err(err)?))
    }

    #[staticmethod]
    #[pyo3(signature = (name, rate=None, tau=None))]
    fn preset(name: &str, rate: Option<f64>, tau: Option<f64>) -> PyResult<Self> {
        Ok(PySequence(preset(name, &PresetParams { rate, tau }).map_err(err)?.sequence))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PySequence(qfilter::ControlSequence::from_json(text).map_err(err)?))
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.0.tau()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Control vector `s₁(t)`.
    fn control_vector(&self, t: f64) -> PyResult<[f64; 3]> {
        self.0.control_vector(t).map_err(err)
    }

    fn time_scaled(&self, factor: f64) -> PyResult<Self> {
        Ok(PySequence(self.0.time_scaled(factor).map_err(err)?))
    }

    fn __repr__(&self) -> String {
        format!("ControlSequence({} segments, tau={})", self.0.len(), self.0.tau())
    }
}

/// One-sided noise power spectral density.
#[pyclass(name = "NoiseSpectrum", module = "qfilter_py", frozen)]
struct PySpectrum(qfilter::NoiseSpectrum);

#[pymethods]
impl PySpectrum {
    #[staticmethod]
    fn white_cutoff(alpha: f64, omega_c: f64) -> PyResult<Self> {
        Ok(PySpectrum(qfilter::NoiseSpectrum::white_cutoff(alpha, omega_c).map_err(err)?))
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, exponent, omega_min=None, omega_max=None))]
    fn power_law(alpha: f64, exponent: f64, omega_min: Option<f64>, omega_max: Option<f64>) -> PyResult<Self> {
        Ok(PySpectrum(qfilter::NoiseSpectrum::power_law(alpha, exponent, omega_min, omega_max).map_err(err)?))
    }

    #[staticmethod]
    fn tabulated(points: Vec<[f64; 2]>) -> PyResult<Self> {
        Ok(PySpectrum(qfilter::NoiseSpectrum::tabulated(points).map_err(err)?))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PySpectrum(qfilter::NoiseSpectrum::from_json(text, None).map_err(err)?))
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn __call__(&self, omega: f64) -> PyResult<f64> {
        self.0.evaluate(omega).map_err(err)
    }

    /// `Δη²`; power laws without `omega_min` need a duration to resolve it.
    #[pyo3(signature = (tau=None))]
    fn variance(&self, tau: Option<f64>) -> PyResult<f64> {
        match tau {
            Some(t) => self.0.resolved(t).variance(),
            None => self.0.variance(),
        }
        .map_err(err)
    }

    fn xi(&self, tau: f64) -> PyResult<f64> {
        self.0.resolved(tau).xi(tau).map_err(err)
    }

    /// Same shape scaled by `factor`.
    fn scaled(&self, factor: f64) -> Self {
        PySpectrum(self.0.scaled(factor))
    }

    /// Rescaled so that `ξ = Δη τ/2` equals `xi` for duration `tau`.
    fn with_xi(&self, tau: f64, xi: f64) -> PyResult<Self> {
        let s = self.0.resolved(tau);
        let v = s.variance().map_err(err)?;
        Ok(PySpectrum(s.scaled((2.0 * xi / tau).powi(2) / v)))
    }

    fn autocorrelation(&self, lag: f64) -> PyResult<f64> {
        self.0.autocorrelation(lag).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("NoiseSpectrum({})", self.0.to_json())
    }
}

/// Precomputed fourth-order filter grid for one sequence, reusable across spectra.
#[pyclass(name = "F2Grid", module = "qfilter_py", frozen)]
struct PyGrid(qfilter::F2Grid);

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (sequence, points=qfilter::filters::F2_DEFAULT_POINTS))]
    fn new(py: Python<'_>, sequence: &PySequence, points: usize) -> PyResult<Self> {
        let seq = sequence.0.clone();
        let grid = py
            .detach(|| qfilter::F2Grid::compute_default(&seq, points, &qfilter::F2Settings::default()))
            .map_err(err)?;
        Ok(PyGrid(grid))
    }

    #[getter]
    fn nodes(&self) -> Vec<f64> {
        self.0.nodes().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// `(omega, F1, [F1_x, F1_y, F1_z])` rows.
#[pyfunction]
fn filter1(sequence: &PySequence, omegas: Vec<f64>) -> PyResult<Vec<(f64, f64, [f64; 3])>> {
    omegas
        .into_iter()
        .map(|w| f1(&sequence.0, w).map(|f| (f.omega, f.total, f.components)).map_err(err))
        .collect()
}

/// The three fourth-order filter terms at one frequency pair.
#[pyfunction]
fn filter2<'py>(py: Python<'py>, sequence: &PySequence, omega: f64, omega_prime: f64) -> PyResult<Bound<'py, PyAny>> {
    let t = f2_terms(&sequence.0, omega, omega_prime, &qfilter::F2Settings::default()).map_err(err)?;
    let d = serialized(py, &t)?;
    d.set_item("total", t.total())?;
    Ok(d)
}

fn parse_order(order: &str) -> PyResult<qfilter::Order> {
    match order {
        "second" | "2" => Ok(qfilter::Order::Second),
        "fourth" | "4" => Ok(qfilter::Order::Fourth),
        _ => Err(PyValueError::new_err(format!("order must be 'second' or 'fourth', got {order:?}"))),
    }
}

/// Analytic fidelity report.
#[pyfunction]
#[pyo3(signature = (sequence, spectrum, order="second", grid=None, rtol=1e-6))]
fn fidelity<'py>(
    py: Python<'py>,
    sequence: &PySequence,
    spectrum: &PySpectrum,
    order: &str,
    grid: Option<&PyGrid>,
    rtol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let order = parse_order(order)?;
    let mut settings = qfilter::FidelitySettings::default();
    settings.integration.rtol = rtol;
    let (seq, spec) = (&sequence.0, &spectrum.0);
    let report = py
        .detach(|| qfilter::fidelity(seq, spec, order, &settings, grid.map(|g| &g.0)))
        .map_err(err)?;
    serialized(py, &report)
}

/// Monte-Carlo ensemble fidelity.
#[pyfunction]
#[pyo3(signature = (sequence, spectrum, trajectories=200, seed=0, dt=None, components=qfilter::montecarlo::DEFAULT_COMPONENTS, retain=false))]
#[allow(clippy::too_many_arguments)]
fn ensemble_fidelity<'py>(
    py: Python<'py>,
    sequence: &PySequence,
    spectrum: &PySpectrum,
    trajectories: usize,
    seed: u64,
    dt: Option<f64>,
    components: usize,
    retain: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let settings = qfilter::McSettings { trajectories, dt, seed, components, retain };
    let (seq, spec) = (&sequence.0, &spectrum.0);
    let result = py.detach(|| qfilter::ensemble_fidelity(seq, spec, &settings)).map_err(err)?;
    serialized(py, &result)
}

/// Errors of preset variants over π-pulse durations `tau_x` (`Ω = π/τ_x`).
#[pyfunction]
#[pyo3(signature = (variants, tau_x, spectrum, order="second", tau_ratio=1.0))]
fn sweep<'py>(
    py: Python<'py>,
    variants: Vec<String>,
    tau_x: Vec<f64>,
    spectrum: &PySpectrum,
    order: &str,
    tau_ratio: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let variants = variants.iter().map(|v| v.parse()).collect::<qfilter::Result<Vec<_>>>().map_err(err)?;
    let config = SweepConfig { variants, tau_x, tau_ratio, order: parse_order(order)?, settings: Default::default() };
    let spec = &spectrum.0;
    let rows = py.detach(|| error_sweep(&config, spec)).map_err(err)?;
    serialized(py, &rows)
}

/// Names of the built-in presets.
#[pyfunction]
fn presets() -> Vec<&'static str> {
    qfilter::PresetName::ALL.iter().map(|p| p.as_str()).collect()
}

#[pymodule]
fn qfilter_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySequence>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyGrid>()?;
    m.add_function(wrap_pyfunction!(filter1, m)?)?;
    m.add_function(wrap_pyfunction!(filter2, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    Ok(())
}
