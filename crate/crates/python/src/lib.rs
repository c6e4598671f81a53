//! Python bindings: patterns, simulation, estimation, bandwidth selection,
//! K-functions and the Monte Carlo harness.

use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use spatial_bandwidth::harness::parse_window;
use spatial_bandwidth::io::{pattern_from_csv, pattern_to_csv};
use spatial_bandwidth::{
    emit_per_replicate, emit_table, estimate_k, run_experiment as run_core_experiment,
    select_campbell, select_diggle, select_ppl, BandwidthGrid, BandwidthSelection,
    EdgeCorrection, Error, ExperimentConfig, ExperimentResult, Grid, IntensityEstimator,
    IntensityRaster, KCorrection, KernelFamily, KernelSpec, KeyValues, Method, ModelSpec,
    PointPattern, RngStream, Window,
};

create_exception!(
    spatial_bandwidth_py,
    SpatialBandwidthError,
    PyValueError,
    "Invalid input to a spatial-bandwidth operation."
);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(m) => PyOSError::new_err(m),
        other => SpatialBandwidthError::new_err(other.to_string()),
    }
}

fn estimator(kernel: &str, edge: &str, dim: usize) -> PyResult<IntensityEstimator> {
    let family: KernelFamily = kernel.parse().map_err(to_py)?;
    let kernel = KernelSpec::new(family, dim).map_err(to_py)?;
    let edge: EdgeCorrection = edge.parse().map_err(to_py)?;
    Ok(IntensityEstimator::new(kernel, edge))
}

/// Axis-aligned observation window.
#[pyclass(name = "Window", frozen, skip_from_py_object, module = "spatial_bandwidth_py")]
#[derive(Clone)]
struct PyWindow {
    inner: Window,
}

#[pymethods]
impl PyWindow {
    #[new]
    fn new(lower: Vec<f64>, upper: Vec<f64>) -> PyResult<Self> {
        Ok(PyWindow {
            inner: Window::new(lower, upper).map_err(to_py)?,
        })
    }

    /// The unit cube `[0, 1]^dim`.
    #[staticmethod]
    #[pyo3(signature = (dim = 2))]
    fn unit(dim: usize) -> Self {
        PyWindow {
            inner: Window::unit(dim),
        }
    }

    /// Parses `"lo_1 hi_1 lo_2 hi_2 ..."`.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyWindow {
            inner: parse_window(text).map_err(to_py)?,
        })
    }

    #[getter]
    fn lower(&self) -> Vec<f64> {
        self.inner.lower().to_vec()
    }

    #[getter]
    fn upper(&self) -> Vec<f64> {
        self.inner.upper().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn volume(&self) -> f64 {
        self.inner.volume()
    }

    fn __eq__(&self, other: &PyWindow) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Window(lower={:?}, upper={:?})", self.inner.lower(), self.inner.upper())
    }
}

fn window_or_unit(window: Option<&PyWindow>) -> Window {
    window.map_or_else(|| Window::unit(2), |w| w.inner.clone())
}

/// Finite point pattern inside a window.
#[pyclass(name = "PointPattern", frozen, skip_from_py_object, module = "spatial_bandwidth_py")]
#[derive(Clone)]
struct PyPointPattern {
    inner: PointPattern,
}

#[pymethods]
impl PyPointPattern {
    #[new]
    #[pyo3(signature = (points, window = None))]
    fn new(points: Vec<Vec<f64>>, window: Option<&PyWindow>) -> PyResult<Self> {
        Ok(PyPointPattern {
            inner: PointPattern::new(window_or_unit(window), points).map_err(to_py)?,
        })
    }

    /// Reads the CSV pattern format; the unit square is used when the text has no window line.
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(PyPointPattern {
            inner: pattern_from_csv(text, Some(Window::unit(2))).map_err(to_py)?,
        })
    }

    fn to_csv(&self) -> String {
        pattern_to_csv(&self.inner)
    }

    #[getter]
    fn window(&self) -> PyWindow {
        PyWindow {
            inner: self.inner.window().clone(),
        }
    }

    fn points(&self) -> Vec<Vec<f64>> {
        self.inner.points().map(<[f64]>::to_vec).collect()
    }

    /// Number of points per unit volume.
    fn intensity(&self) -> f64 {
        self.inner.len() as f64 / self.inner.window().volume()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __eq__(&self, other: &PyPointPattern) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("PointPattern(n={}, dim={})", self.inner.len(), self.inner.dim())
    }
}

/// Simulates replicate `replicate` of a model; each (seed, replicate) pair is an independent stream.
#[pyfunction]
#[pyo3(signature = (model, params = "", window = None, seed = 1, replicate = 0, field_resolution = 64))]
fn simulate(
    py: Python<'_>,
    model: &str,
    params: &str,
    window: Option<&PyWindow>,
    seed: u64,
    replicate: u64,
    field_resolution: usize,
) -> PyResult<PyPointPattern> {
    let spec = ModelSpec::parse(model, params, window_or_unit(window)).map_err(to_py)?;
    let inner = py
        .detach(|| {
            spec.simulator(field_resolution)?
                .simulate(RngStream::new(seed, replicate))
        })
        .map_err(to_py)?;
    Ok(PyPointPattern { inner })
}

/// Intensity of a model at a location: the trend for Poisson models and `E Λ(x)` otherwise.
#[pyfunction]
#[pyo3(signature = (model, params, x, window = None))]
fn true_intensity(model: &str, params: &str, x: Vec<f64>, window: Option<&PyWindow>) -> PyResult<f64> {
    let spec = ModelSpec::parse(model, params, window_or_unit(window)).map_err(to_py)?;
    if x.len() != spec.window.dim() {
        return Err(to_py(Error::DimensionMismatch {
            expected: spec.window.dim(),
            got: x.len(),
        }));
    }
    Ok(spec.true_intensity(&x))
}

/// Kernel estimate on the cell centres of a regular grid.
#[pyclass(name = "Raster", frozen, module = "spatial_bandwidth_py")]
struct PyRaster {
    inner: IntensityRaster,
}

#[pymethods]
impl PyRaster {
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }

    #[getter]
    fn resolution(&self) -> Vec<usize> {
        self.inner.grid.resolution().to_vec()
    }

    #[getter]
    fn bandwidth(&self) -> f64 {
        self.inner.bandwidth
    }

    /// Node coordinates, in the order of `values`.
    fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.inner.grid.len()).map(|k| self.inner.grid.node(k)).collect()
    }

    /// Midpoint-rule integral of the estimate over the window.
    fn integrated_mass(&self) -> f64 {
        self.inner.integrated_mass()
    }

    fn __len__(&self) -> usize {
        self.inner.values.len()
    }
}

#[pyfunction]
#[pyo3(signature = (pattern, bandwidth, kernel = "gaussian", edge = "none", resolution = 128))]
fn estimate(
    py: Python<'_>,
    pattern: &PyPointPattern,
    bandwidth: f64,
    kernel: &str,
    edge: &str,
    resolution: usize,
) -> PyResult<PyRaster> {
    let p = &pattern.inner;
    let est = estimator(kernel, edge, p.dim())?;
    let grid = Grid::uniform(p.window(), resolution).map_err(to_py)?;
    let inner = py.detach(|| est.rasterize(p, bandwidth, &grid)).map_err(to_py)?;
    Ok(PyRaster { inner })
}

#[pyfunction]
#[pyo3(signature = (pattern, x, bandwidth, kernel = "gaussian", edge = "none"))]
fn estimate_at(
    pattern: &PyPointPattern,
    x: Vec<f64>,
    bandwidth: f64,
    kernel: &str,
    edge: &str,
) -> PyResult<f64> {
    let est = estimator(kernel, edge, pattern.inner.dim())?;
    est.estimate_at(&x, bandwidth, &pattern.inner).map_err(to_py)
}

/// Criterion curve and the chosen bandwidth.
#[pyclass(name = "Selection", frozen, module = "spatial_bandwidth_py")]
struct PySelection {
    inner: BandwidthSelection,
}

#[pymethods]
impl PySelection {
    #[getter]
    fn method(&self) -> String {
        self.inner.method.to_string()
    }

    #[getter]
    fn selected(&self) -> f64 {
        self.inner.selected
    }

    /// `(h, value)` pairs; inadmissible candidates carry NaN.
    #[getter]
    fn curve(&self) -> Vec<(f64, f64)> {
        self.inner.curve.clone()
    }

    /// `"min"` or `"max"`.
    #[getter]
    fn argkind(&self) -> String {
        format!("{:?}", self.inner.argkind).to_ascii_lowercase()
    }

    fn __repr__(&self) -> String {
        format!("Selection(method={}, selected={})", self.inner.method, self.inner.selected)
    }
}

#[pyfunction]
#[pyo3(signature = (pattern, method, kernel = "gaussian", edge = "none", hgrid = "0.01:1.5:128", resolution = 128, tmax = None))]
#[allow(clippy::too_many_arguments)]
fn select(
    py: Python<'_>,
    pattern: &PyPointPattern,
    method: &str,
    kernel: &str,
    edge: &str,
    hgrid: &str,
    resolution: usize,
    tmax: Option<f64>,
) -> PyResult<PySelection> {
    let p = &pattern.inner;
    let method: Method = method.parse().map_err(to_py)?;
    let bgrid: BandwidthGrid = hgrid.parse().map_err(to_py)?;
    let est = estimator(kernel, edge, p.dim())?;
    let inner = py
        .detach(|| match method {
            Method::Campbell => select_campbell(p, &est.kernel, est.correction, &bgrid),
            Method::Ppl => {
                let q = Grid::uniform(p.window(), resolution)?;
                select_ppl(p, &est.kernel, est.correction, &bgrid, &q)
            }
            Method::Diggle => select_diggle(p, &bgrid, tmax),
        })
        .map_err(to_py)?;
    Ok(PySelection { inner })
}

/// Ripley's K at each distance in `t`.
#[pyfunction]
#[pyo3(signature = (pattern, t, correction = "translation"))]
fn k_function(pattern: &PyPointPattern, t: Vec<f64>, correction: &str) -> PyResult<Vec<f64>> {
    let corr: KCorrection = correction.parse().map_err(to_py)?;
    let k = estimate_k(&pattern.inner, corr).map_err(to_py)?;
    Ok(t.iter().map(|&s| k.k(s)).collect())
}

/// Outcome of a Monte Carlo comparison.
#[pyclass(name = "Experiment", frozen, module = "spatial_bandwidth_py")]
struct PyExperiment {
    config_text: String,
    label: String,
    result: ExperimentResult,
}

#[pymethods]
impl PyExperiment {
    #[getter]
    fn expected_count(&self) -> f64 {
        self.result.expected_count
    }

    /// Normalized average ISE per method; `None` when every replicate failed.
    fn scores<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for s in &self.result.summaries {
            d.set_item(s.method.to_string(), s.normalized_average_ise)?;
        }
        Ok(d)
    }

    /// `(successes, failures)` per method.
    fn counts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for s in &self.result.summaries {
            d.set_item(s.method.to_string(), (s.successes, s.failures))?;
        }
        Ok(d)
    }

    fn table(&self) -> String {
        emit_table(std::slice::from_ref(&self.result), std::slice::from_ref(&self.label))
    }

    fn per_replicate(&self) -> String {
        emit_per_replicate(&self.result)
    }

    /// Every effective setting, in the configuration file format.
    #[getter]
    fn config_text(&self) -> &str {
        &self.config_text
    }
}

/// Runs the experiment described by configuration text (`key = value` lines).
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &str) -> PyResult<PyExperiment> {
    let kv = KeyValues::parse(config).map_err(to_py)?;
    let cfg = ExperimentConfig::from_key_values(&kv).map_err(to_py)?;
    let result = py.detach(|| run_core_experiment(&cfg)).map_err(to_py)?;
    Ok(PyExperiment {
        config_text: cfg.to_config_text(),
        label: cfg.model.to_string(),
        result,
    })
}

#[pymodule]
fn spatial_bandwidth_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SpatialBandwidthError", m.py().get_type::<SpatialBandwidthError>())?;
    m.add_class::<PyWindow>()?;
    m.add_class::<PyPointPattern>()?;
    m.add_class::<PyRaster>()?;
    m.add_class::<PySelection>()?;
    m.add_class::<PyExperiment>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(true_intensity, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_at, m)?)?;
    m.add_function(wrap_pyfunction!(select, m)?)?;
    m.add_function(wrap_pyfunction!(k_function, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
