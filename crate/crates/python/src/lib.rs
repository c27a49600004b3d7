//! Python bindings for `lpdmt-core`.
//!
//! Structured results (allocations, sweeps, reports) are returned as plain
//! dicts and lists.

use std::path::PathBuf;

use lpdmt_core::coding_gap;
use lpdmt_core::loader::{self, LoadParams, Strategy};
use lpdmt_core::oracle;
use lpdmt_core::plc_channel::{self, ChannelResponse, FrequencyGrid};
use lpdmt_core::simkit::{self, Mode, SimConfig};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

fn err(e: lpdmt_core::Error) -> PyErr {
    match e {
        lpdmt_core::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize + ?Sized>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn json_arg(py: Python<'_>, obj: Option<&Bound<'_, PyDict>>) -> PyResult<String> {
    match obj {
        Some(d) => py.import("json")?.call_method1("dumps", (d,))?.extract(),
        None => Ok("{}".to_string()),
    }
}

fn parse_strategy(name: &str) -> PyResult<Strategy> {
    match name {
        "adjacent" => Ok(Strategy::Adjacent),
        "interleaved" => Ok(Strategy::Interleaved),
        _ => Err(PyValueError::new_err(format!("unknown strategy {name:?}"))),
    }
}

fn parse_mode(name: &str) -> PyResult<Mode> {
    match name {
        "lpdmt" => Ok(Mode::Lpdmt),
        "dmt" => Ok(Mode::Dmt),
        _ => Err(PyValueError::new_err(format!("unknown mode {name:?}"))),
    }
}

fn config(py: Python<'_>, cfg: Option<&Bound<'_, PyDict>>) -> PyResult<SimConfig> {
    let cfg = SimConfig::from_json_str(&json_arg(py, cfg)?).map_err(PyValueError::new_err)?;
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Multipath power-line channel model.
#[pyclass(name = "ChannelModel", from_py_object)]
#[derive(Clone)]
struct PyChannelModel {
    inner: plc_channel::ChannelModel,
}

#[pymethods]
impl PyChannelModel {
    /// Bundled reference model by name.
    #[staticmethod]
    #[pyo3(signature = (name = "zimmermann15"))]
    fn named(name: &str) -> PyResult<Self> {
        Ok(PyChannelModel {
            inner: plc_channel::ChannelModel::named(name).map_err(err)?,
        })
    }

    /// Model from a JSON or TOML file.
    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(PyChannelModel {
            inner: plc_channel::ChannelModel::from_file(&path).map_err(err)?,
        })
    }

    #[getter]
    fn num_paths(&self) -> usize {
        self.inner.paths.len()
    }

    /// Power gains `|H(f)|^2` on a uniform subcarrier grid.
    #[pyo3(signature = (f_start_hz = 500e3, spacing_hz = 19.043e3, n = 1024))]
    fn gains(&self, f_start_hz: f64, spacing_hz: f64, n: usize) -> PyResult<Vec<f64>> {
        let grid = FrequencyGrid {
            f_start: f_start_hz,
            spacing: spacing_hz,
            n,
        };
        Ok(plc_channel::frequency_response(&self.inner, &grid).map_err(err)?.gains)
    }

    fn __repr__(&self) -> String {
        format!("ChannelModel(paths={}, v_p={})", self.inner.paths.len(), self.inner.v_p)
    }
}

/// Per-order SNR gap table.
#[pyclass(name = "GapTable", from_py_object)]
#[derive(Clone)]
struct PyGapTable {
    inner: coding_gap::GapTable,
}

impl PyGapTable {
    fn check(&self, b: u32) -> PyResult<()> {
        if b < self.inner.b_min || b > self.inner.b_max {
            return Err(PyValueError::new_err(format!(
                "b = {b} outside [{}, {}]",
                self.inner.b_min, self.inner.b_max
            )));
        }
        Ok(())
    }
}

#[pymethods]
impl PyGapTable {
    /// Builds the table; keyword arguments override the coding defaults
    /// (`target_ber`, `gamma_m_db`, `gamma_tc_db`, `rs_n`, `rs_k`, `rs_t`,
    /// `b_min`, `b_max`, `coded`).
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(py: Python<'_>, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let cfg: coding_gap::GapConfig =
            serde_json::from_str(&json_arg(py, kwargs)?).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyGapTable {
            inner: coding_gap::build_gap_table(&cfg).map_err(err)?,
        })
    }

    /// Table with the same gap for every order.
    #[staticmethod]
    fn constant(b_min: u32, b_max: u32, gamma_db: f64) -> PyResult<Self> {
        Ok(PyGapTable {
            inner: coding_gap::GapTable::constant(b_min, b_max, gamma_db).map_err(err)?,
        })
    }

    #[getter]
    fn b_min(&self) -> u32 {
        self.inner.b_min
    }

    #[getter]
    fn b_max(&self) -> u32 {
        self.inner.b_max
    }

    #[getter]
    fn coded(&self) -> bool {
        self.inner.coded
    }

    fn gamma(&self, b: u32) -> PyResult<f64> {
        self.check(b)?;
        Ok(self.inner.gamma(b))
    }

    fn gamma_db(&self, b: u32) -> PyResult<f64> {
        self.check(b)?;
        Ok(self.inner.gamma_db(b))
    }

    fn rows<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.rows().collect::<Vec<_>>())
    }

    fn __repr__(&self) -> String {
        format!(
            "GapTable(b_min={}, b_max={}, coded={})",
            self.inner.b_min, self.inner.b_max, self.inner.coded
        )
    }
}

#[pyfunction]
fn q_function(x: f64) -> f64 {
    coding_gap::q_function(x)
}

#[pyfunction]
fn q_inverse(p: f64) -> PyResult<f64> {
    coding_gap::q_inverse(p).map_err(err)
}

#[pyfunction]
fn gap_at_ber_db(p: f64) -> PyResult<f64> {
    coding_gap::gap_at_ber_db(p).map_err(err)
}

/// Subsets of subcarrier indices (0-based).
#[pyfunction]
#[pyo3(signature = (n, lc, strategy = "adjacent"))]
fn partition(n: usize, lc: usize, strategy: &str) -> PyResult<Vec<Vec<usize>>> {
    Ok(loader::partition(n, lc, parse_strategy(strategy)?)
        .map_err(err)?
        .subsets)
}

fn params(
    lc: usize,
    es: f64,
    n0: f64,
    table: &coding_gap::GapTable,
    b_min: Option<u32>,
    b_max: Option<u32>,
) -> LoadParams {
    LoadParams {
        lc,
        es,
        n0,
        b_min: b_min.unwrap_or(table.b_min),
        b_max: b_max.unwrap_or(table.b_max),
    }
}

/// Greedy allocation for one subset with gains `gains`.
#[pyfunction]
#[pyo3(signature = (gains, table, es, n0, b_min = None, b_max = None))]
fn allocate_subset<'py>(
    py: Python<'py>,
    gains: Vec<f64>,
    table: &PyGapTable,
    es: f64,
    n0: f64,
    b_min: Option<u32>,
    b_max: Option<u32>,
) -> PyResult<Bound<'py, PyAny>> {
    let p = params(gains.len(), es, n0, &table.inner, b_min, b_max);
    let alloc = loader::allocate_subset(&gains, &table.inner, &p).map_err(err)?;
    to_py(py, &alloc)
}

/// Allocation over all subcarriers partitioned into subsets of `lc` tones.
#[pyfunction]
#[pyo3(signature = (gains, table, lc, es, n0, strategy = "adjacent"))]
fn allocate_system<'py>(
    py: Python<'py>,
    gains: Vec<f64>,
    table: &PyGapTable,
    lc: usize,
    es: f64,
    n0: f64,
    strategy: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let plan = loader::partition(gains.len(), lc, parse_strategy(strategy)?).map_err(err)?;
    let resp = ChannelResponse::from_gains(gains).map_err(err)?;
    let p = params(lc, es, n0, &table.inner, None, None);
    let alloc = loader::allocate_system(&resp, &plan, &table.inner, &p).map_err(err)?;
    to_py(py, &alloc)
}

/// Optimal allocation for one subset by enumeration.
#[pyfunction]
#[pyo3(signature = (gains, table, es, n0, b_min = None, b_max = None))]
fn exhaustive_allocate<'py>(
    py: Python<'py>,
    gains: Vec<f64>,
    table: &PyGapTable,
    es: f64,
    n0: f64,
    b_min: Option<u32>,
    b_max: Option<u32>,
) -> PyResult<Bound<'py, PyAny>> {
    let p = params(gains.len(), es, n0, &table.inner, b_min, b_max);
    to_py(py, &oracle::exhaustive_allocate(&gains, &table.inner, &p).map_err(err)?)
}

/// Measured symbol error rate of `2^b`-QAM at the SNR implied by `gap_db`.
#[pyfunction]
#[pyo3(signature = (b, gap_db, symbols = 1_000_000, seed = 1))]
fn qam_error_monte_carlo(b: u32, gap_db: f64, symbols: u64, seed: u64) -> PyResult<f64> {
    oracle::qam_error_monte_carlo(b, gap_db, symbols, seed).map_err(err)
}

/// Greedy loader against exhaustive search on seeded random instances.
#[pyfunction]
#[pyo3(signature = (table, first_seed = 1, count = 100, b_max = 4))]
fn agreement_harness<'py>(
    py: Python<'py>,
    table: &PyGapTable,
    first_seed: u64,
    count: usize,
    b_max: u32,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(
        py,
        &oracle::agreement_harness(&table.inner, first_seed, count, b_max).map_err(err)?,
    )
}

/// Throughput sweep. `config` follows the TOML config layout as nested dicts.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn run_sweep<'py>(py: Python<'py>, config: Option<&Bound<'py, PyDict>>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = self::config(py, config)?;
    to_py(py, &simkit::run_sweep(&cfg).map_err(err)?)
}

/// Per-subcarrier energy of one system variant.
#[pyfunction]
#[pyo3(signature = (mode = "lpdmt", coded = true, target_gain_db = None, config = None))]
fn energy_profile<'py>(
    py: Python<'py>,
    mode: &str,
    coded: bool,
    target_gain_db: Option<f64>,
    config: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = self::config(py, config)?;
    let rows = simkit::energy_profile(&cfg, parse_mode(mode)?, coded, target_gain_db).map_err(err)?;
    to_py(py, &rows)
}

/// Full simulator config with defaults filled in.
#[pyfunction]
#[pyo3(signature = (path = None))]
fn load_config<'py>(py: Python<'py>, path: Option<PathBuf>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = match path {
        Some(p) => SimConfig::from_file(&p).map_err(err)?,
        None => SimConfig::default(),
    };
    to_py(py, &cfg)
}

#[pymodule]
fn lpdmt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChannelModel>()?;
    m.add_class::<PyGapTable>()?;
    m.add_function(wrap_pyfunction!(q_function, m)?)?;
    m.add_function(wrap_pyfunction!(q_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(gap_at_ber_db, m)?)?;
    m.add_function(wrap_pyfunction!(partition, m)?)?;
    m.add_function(wrap_pyfunction!(allocate_subset, m)?)?;
    m.add_function(wrap_pyfunction!(allocate_system, m)?)?;
    m.add_function(wrap_pyfunction!(exhaustive_allocate, m)?)?;
    m.add_function(wrap_pyfunction!(qam_error_monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(agreement_harness, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(energy_profile, m)?)?;
    m.add_function(wrap_pyfunction!(load_config, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
