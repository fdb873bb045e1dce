//! Python bindings: diagrams, parameters, height states, the particle
//! simulator, the jump chain and the checks. Reports come back as plain
//! dictionaries.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyTuple};
use tabdyn::ensemble::{replica_rng, run_replicas};
use tabdyn::jump_chain::{build_generator, stationary_distribution, transient_distribution, ShapeDistribution};
use tabdyn::pdmp::{run_with_rng, Engine};
use tabdyn::verify::{self, EnsembleSource, Initial};
use tabdyn::{Cell, Complex, Error, Mode};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Explosion { .. } | Error::Solver(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn cell(i: usize, j: usize) -> PyResult<Cell> {
    Cell::new(i, j).map_err(to_py)
}

fn json_value<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn complex_arg(v: &Bound<'_, PyAny>) -> PyResult<Complex> {
    if let Ok(s) = v.extract::<String>() {
        return s.parse().map_err(to_py);
    }
    if let Ok(x) = v.extract::<f64>() {
        return Ok(Complex::real(x));
    }
    let re: f64 = v.getattr("real")?.extract()?;
    let im: f64 = v.getattr("imag")?.extract()?;
    Ok(Complex { re, im })
}

fn mode_arg(mode: &str) -> PyResult<Mode> {
    mode.parse().map_err(to_py)
}

#[pyclass(name = "Parameters", module = "tabdyn_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyParameters {
    inner: tabdyn::Parameters,
}

#[pymethods]
impl PyParameters {
    /// `z` and `z_prime` may be numbers, Python complex numbers, or strings
    /// such as `"1+2i"`.
    #[new]
    #[pyo3(signature = (z = None, z_prime = None, r = 1.0))]
    fn new(z: Option<&Bound<'_, PyAny>>, z_prime: Option<&Bound<'_, PyAny>>, r: f64) -> PyResult<Self> {
        let z = z.map(complex_arg).transpose()?.unwrap_or(Complex::real(0.5));
        let zp = z_prime.map(complex_arg).transpose()?.unwrap_or(Complex::real(0.5));
        Ok(PyParameters { inner: tabdyn::Parameters::from_complex(z, zp, r).map_err(to_py)? })
    }

    #[getter]
    fn s(&self) -> f64 {
        self.inner.s
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.r
    }

    /// Jump rate of the cell `(i, j)`.
    fn q(&self, i: usize, j: usize) -> PyResult<f64> {
        Ok(self.inner.q_rate(cell(i, j)?))
    }

    fn with_r(&self, r: f64) -> PyResult<Self> {
        Ok(PyParameters { inner: self.inner.with_r(r).map_err(to_py)? })
    }

    fn __repr__(&self) -> String {
        format!("Parameters(s={}, p={}, r={})", self.inner.s, self.inner.p, self.inner.r)
    }
}

#[pyclass(name = "YoungDiagram", module = "tabdyn_py", frozen, skip_from_py_object, eq, hash)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PyYoungDiagram {
    inner: tabdyn::YoungDiagram,
}

#[pymethods]
impl PyYoungDiagram {
    #[new]
    #[pyo3(signature = (rows = Vec::new()))]
    fn new(rows: Vec<usize>) -> PyResult<Self> {
        Ok(PyYoungDiagram { inner: tabdyn::YoungDiagram::new(rows).map_err(to_py)? })
    }

    #[getter]
    fn rows(&self) -> Vec<usize> {
        self.inner.rows().to_vec()
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    /// Number of standard tableaux of this shape.
    fn dim(&self) -> PyResult<u64> {
        self.inner.dim().map_err(to_py)
    }

    fn hook_length(&self, i: usize, j: usize) -> PyResult<usize> {
        let c = cell(i, j)?;
        if !self.inner.contains(c) {
            return Err(PyValueError::new_err(format!("{c} is not in {}", self.inner)));
        }
        Ok(self.inner.hook_length(c))
    }

    fn addable_corners(&self) -> Vec<(usize, usize)> {
        self.inner.addable_corners().into_iter().map(|c| (c.i, c.j)).collect()
    }

    fn removable_corners(&self) -> Vec<(usize, usize)> {
        self.inner.removable_corners().into_iter().map(|c| (c.i, c.j)).collect()
    }

    fn add_cell(&self, i: usize, j: usize) -> PyResult<Self> {
        let c = cell(i, j)?;
        if !self.inner.is_addable(c) {
            return Err(PyValueError::new_err(format!("{c} is not addable to {}", self.inner)));
        }
        Ok(PyYoungDiagram { inner: self.inner.add_cell(c) })
    }

    fn remove_cell(&self, i: usize, j: usize) -> PyResult<Self> {
        let c = cell(i, j)?;
        if !self.inner.is_removable(c) {
            return Err(PyValueError::new_err(format!("{c} is not removable from {}", self.inner)));
        }
        Ok(PyYoungDiagram { inner: self.inner.remove_cell(c) })
    }

    /// All diagrams with `size` cells.
    #[staticmethod]
    fn all_of_size(size: usize) -> Vec<Self> {
        tabdyn::YoungDiagram::all_of_size(size).into_iter().map(|inner| PyYoungDiagram { inner }).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.size()
    }

    fn __repr__(&self) -> String {
        format!("YoungDiagram({})", self.inner)
    }
}

#[pyclass(name = "HeightState", module = "tabdyn_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyHeightState {
    inner: tabdyn::HeightState,
}

#[pymethods]
impl PyHeightState {
    /// A state at level `r` with cells given as `(i, j, height)`.
    #[new]
    #[pyo3(signature = (r = 1.0, cells = Vec::new()))]
    fn new(r: f64, cells: Vec<(usize, usize, f64)>) -> PyResult<Self> {
        let cells = cells.into_iter().map(|(i, j, h)| Ok((cell(i, j)?, h))).collect::<PyResult<Vec<_>>>()?;
        Ok(PyHeightState { inner: tabdyn::HeightState::from_cells(r, cells).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyHeightState { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.r()
    }

    #[getter]
    fn cells(&self) -> Vec<(usize, usize, f64)> {
        self.inner.cells().map(|(c, h)| (c.i, c.j, h)).collect()
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    fn shape(&self) -> PyYoungDiagram {
        PyYoungDiagram { inner: self.inner.shape() }
    }

    /// Height of `(i, j)`; `r` outside the support.
    fn height(&self, i: usize, j: usize) -> PyResult<f64> {
        Ok(self.inner.height(cell(i, j)?))
    }

    fn h_down(&self, i: usize, j: usize) -> PyResult<f64> {
        Ok(self.inner.h_down(cell(i, j)?))
    }

    fn truncate(&self, r: f64) -> PyResult<Self> {
        Ok(PyHeightState { inner: self.inner.truncate(r).map_err(to_py)? })
    }

    fn __len__(&self) -> usize {
        self.inner.size()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("HeightState(r={}, cells={:?})", self.inner.r(), self.cells())
    }
}

fn subdiagram_arg(rows: Option<Vec<usize>>) -> PyResult<Option<tabdyn::YoungDiagram>> {
    rows.map(tabdyn::YoungDiagram::new).transpose().map_err(to_py)
}

fn sim_config(params: &PyParameters, time: f64, seed: u64, mode: &str, subdiagram: Option<Vec<usize>>) -> PyResult<tabdyn::SimConfig> {
    let mut cfg = tabdyn::SimConfig::new(params.inner, time, seed);
    cfg.mode = mode_arg(mode)?;
    cfg.subdiagram = subdiagram_arg(subdiagram)?;
    Ok(cfg)
}

/// Final states of `replicas` independent runs from the empty tableau.
#[pyfunction]
#[pyo3(signature = (params, time, replicas = 1, seed = 0, mode = "full", subdiagram = None))]
fn simulate(py: Python<'_>, params: &PyParameters, time: f64, replicas: usize, seed: u64, mode: &str, subdiagram: Option<Vec<usize>>) -> PyResult<Vec<PyHeightState>> {
    let cfg = sim_config(params, time, seed, mode, subdiagram)?;
    let r = params.inner.r;
    let finals = py
        .detach(|| {
            run_replicas(seed, replicas, |_, rng| {
                let mut engine = Engine::new(&cfg, tabdyn::HeightState::empty(r)?, &mut *rng)?;
                engine.run_with(|_, _| {})?;
                Ok(engine.into_state())
            })
        })
        .map_err(to_py)?;
    Ok(finals.into_iter().map(|inner| PyHeightState { inner }).collect())
}

/// One run (replica `replica` of master seed `seed`) with its event log;
/// events are dictionaries with keys t, i, j, kind, from, to.
#[pyfunction]
#[pyo3(signature = (params, time, seed = 0, replica = 0, mode = "full", subdiagram = None))]
fn simulate_events<'py>(
    py: Python<'py>,
    params: &PyParameters,
    time: f64,
    seed: u64,
    replica: u64,
    mode: &str,
    subdiagram: Option<Vec<usize>>,
) -> PyResult<(PyHeightState, Bound<'py, PyAny>)> {
    let cfg = sim_config(params, time, seed, mode, subdiagram)?;
    let initial = tabdyn::HeightState::empty(params.inner.r).map_err(to_py)?;
    let (state, log, _) = run_with_rng(&cfg, initial, replica_rng(seed, replica)).map_err(to_py)?;
    Ok((PyHeightState { inner: state }, json_value(py, &log)?))
}

fn distribution_dict<'py>(py: Python<'py>, dist: &ShapeDistribution) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    for (shape, p) in dist {
        out.set_item(PyTuple::new(py, shape.rows())?, p)?;
    }
    Ok(out)
}

/// Law of the jump chain at time `time` started from `start`, restricted to
/// `|λ| ≤ max_size`. Returns `(distribution, overflow_mass)`; the
/// distribution is keyed by tuples of row lengths.
#[pyfunction]
#[pyo3(signature = (params, max_size, time, start = Vec::new()))]
fn transient<'py>(py: Python<'py>, params: &PyParameters, max_size: usize, time: f64, start: Vec<usize>) -> PyResult<(Bound<'py, PyDict>, f64)> {
    let gen = build_generator(max_size, &params.inner).map_err(to_py)?;
    let start = tabdyn::YoungDiagram::new(start).map_err(to_py)?;
    let tr = transient_distribution(&gen, &start, time).map_err(to_py)?;
    Ok((distribution_dict(py, &gen.to_distribution(&tr.probs))?, tr.overflow))
}

/// Stationary law of the jump chain restricted to `|λ| ≤ max_size`.
#[pyfunction]
fn stationary<'py>(py: Python<'py>, params: &PyParameters, max_size: usize) -> PyResult<Bound<'py, PyDict>> {
    let gen = build_generator(max_size, &params.inner).map_err(to_py)?;
    let st = stationary_distribution(&gen).map_err(to_py)?;
    distribution_dict(py, &gen.to_distribution(&st.probs))
}

/// Up rates, down rates and total exit rate at a diagram.
#[pyfunction]
fn rate_row<'py>(py: Python<'py>, params: &PyParameters, shape: &PyYoungDiagram) -> PyResult<Bound<'py, PyAny>> {
    json_value(py, &tabdyn::jump_chain::rate_row(&shape.inner, &params.inner))
}

/// Draws from normalized Lebesgue measure on tableaux of the given shape.
#[pyfunction]
#[pyo3(signature = (shape, r = 1.0, n = 1, seed = 0))]
fn sample_given_shape(shape: &PyYoungDiagram, r: f64, n: usize, seed: u64) -> PyResult<Vec<PyHeightState>> {
    let mut rng = replica_rng(seed, 0);
    (0..n)
        .map(|_| {
            tabdyn::gibbs::sample_given_shape(&shape.inner, r, &mut rng)
                .map(|inner| PyHeightState { inner })
                .map_err(to_py)
        })
        .collect()
}

#[pyfunction]
fn test_gibbsianness<'py>(py: Python<'py>, states: Vec<PyRef<'py, PyHeightState>>) -> PyResult<Bound<'py, PyAny>> {
    let states: Vec<tabdyn::HeightState> = states.iter().map(|s| s.inner.clone()).collect();
    json_value(py, &tabdyn::gibbs::test_gibbsianness(&states))
}

#[pyfunction]
#[pyo3(signature = (max_size = 8))]
fn verify_rowsums(py: Python<'_>, max_size: usize) -> PyResult<Bound<'_, PyAny>> {
    json_value(py, &verify::rowsum_check(max_size, &verify::standard_exact_parameter_sets()))
}

#[pyfunction]
#[pyo3(signature = (trials = 200, seed = 0))]
fn verify_identity(py: Python<'_>, trials: usize, seed: u64) -> PyResult<Bound<'_, PyAny>> {
    json_value(py, &verify::identity_trials(trials, seed))
}

#[pyfunction]
#[pyo3(signature = (params, time = 1.0, replicas = 10_000, max_size = 12, seed = 0, source = "pdmp"))]
fn verify_claim4a<'py>(py: Python<'py>, params: &PyParameters, time: f64, replicas: usize, max_size: usize, seed: u64, source: &str) -> PyResult<Bound<'py, PyAny>> {
    let source = match source {
        "pdmp" => EnsembleSource::Pdmp,
        "gillespie" => EnsembleSource::Gillespie,
        other => return Err(PyValueError::new_err(format!("unknown source {other:?}"))),
    };
    let prm = params.inner;
    let rep = py.detach(|| verify::claim_4a_test(&prm, time, replicas, max_size, seed, source)).map_err(to_py)?;
    json_value(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (params, r_prime = 2.0, time = 1.0, replicas = 10_000, seed = 0))]
fn verify_claim5a<'py>(py: Python<'py>, params: &PyParameters, r_prime: f64, time: f64, replicas: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let prm = params.inner;
    let rep = py.detach(|| verify::claim_5a_test(&prm, r_prime, time, replicas, seed)).map_err(to_py)?;
    json_value(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (params, max_size = 14, burn_in = 10.0, time = 30.0, replicas = 1000, seed = 0, initial = "empty"))]
#[allow(clippy::too_many_arguments)]
fn verify_stationarity<'py>(
    py: Python<'py>,
    params: &PyParameters,
    max_size: usize,
    burn_in: f64,
    time: f64,
    replicas: usize,
    seed: u64,
    initial: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let initial = match initial {
        "empty" => Initial::Empty,
        "stationary" => Initial::Stationary,
        other => return Err(PyValueError::new_err(format!("unknown initial law {other:?}"))),
    };
    let prm = params.inner;
    let rep = py.detach(|| verify::stationarity_test(&prm, max_size, burn_in, time, replicas, seed, initial)).map_err(to_py)?;
    json_value(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (params, mode = "full", samples = 20_000, seed = 0))]
fn verify_single_particle<'py>(py: Python<'py>, params: &PyParameters, mode: &str, samples: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let mode = mode_arg(mode)?;
    let prm = params.inner;
    let rep = py.detach(|| verify::single_particle_test(&prm, mode, samples, seed)).map_err(to_py)?;
    json_value(py, &rep)
}

#[pymodule]
fn tabdyn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParameters>()?;
    m.add_class::<PyYoungDiagram>()?;
    m.add_class::<PyHeightState>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_events, m)?)?;
    m.add_function(wrap_pyfunction!(transient, m)?)?;
    m.add_function(wrap_pyfunction!(stationary, m)?)?;
    m.add_function(wrap_pyfunction!(rate_row, m)?)?;
    m.add_function(wrap_pyfunction!(sample_given_shape, m)?)?;
    m.add_function(wrap_pyfunction!(test_gibbsianness, m)?)?;
    m.add_function(wrap_pyfunction!(verify_rowsums, m)?)?;
    m.add_function(wrap_pyfunction!(verify_identity, m)?)?;
    m.add_function(wrap_pyfunction!(verify_claim4a, m)?)?;
    m.add_function(wrap_pyfunction!(verify_claim5a, m)?)?;
    m.add_function(wrap_pyfunction!(verify_stationarity, m)?)?;
    m.add_function(wrap_pyfunction!(verify_single_particle, m)?)?;
    Ok(())
}
