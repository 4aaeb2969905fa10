//! Python bindings. Results that are plain records come back as dicts.

use std::path::PathBuf;

use acs_core::config::ConfigFile;
use acs_core::designs::{draw_paired, partition_into_networks, Condition, Neighborhood, SrsSample};
use acs_core::efficiency;
use acs_core::estimators;
use acs_core::harness::{self, ExperimentConfig};
use acs_core::io::{self, ExperimentOutputs, PopulationFile};
use acs_core::population::{self, ClusterSpec, DispersionSpec};
use acs_core::{Error, RngSeed};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::Format { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize + ?Sized>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn condition(threshold: f64, neighborhood: u8) -> PyResult<Condition> {
    Ok(Condition::new(threshold).with_neighborhood(Neighborhood::from_degree(neighborhood).map_err(py_err)?))
}

/// Rectangular grid of non-negative counts, stored row-major.
#[pyclass(name = "GridFrame", module = "acs_sampling", frozen)]
pub struct PyGridFrame {
    inner: acs_core::GridFrame,
}

#[pymethods]
impl PyGridFrame {
    #[new]
    fn new(width: usize, height: usize, counts: Vec<u64>) -> PyResult<Self> {
        Ok(Self {
            inner: acs_core::GridFrame::new(width, height, counts).map_err(py_err)?,
        })
    }

    /// Reads a population `.csv` or `.json` file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let file = io::load_population(&path).map_err(py_err)?;
        Ok(Self {
            inner: file.frame().map_err(py_err)?,
        })
    }

    /// Writes the frame as `x,y,count` CSV, or as JSON when the path ends in `.json`.
    fn save(&self, path: PathBuf) -> PyResult<()> {
        let bytes = if path.extension().is_some_and(|e| e == "json") {
            io::to_json(&PopulationFile::new(&self.inner, None, None))
        } else {
            io::frame_to_csv(&self.inner)
        }
        .map_err(py_err)?;
        io::write_atomic(&path, &bytes).map_err(py_err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn counts(&self) -> Vec<u64> {
        self.inner.counts().to_vec()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<u64> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err(format!("cell ({x}, {y}) is outside the frame")));
        }
        Ok(self.inner.get(x, y))
    }

    fn total(&self) -> u64 {
        self.inner.total()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    /// Variance-to-mean ratio; raises for an all-zero frame.
    fn vmr(&self) -> PyResult<f64> {
        population::variance_to_mean_ratio(&self.inner).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "GridFrame(width={}, height={}, total={})",
            self.inner.width(),
            self.inner.height(),
            self.inner.total()
        )
    }
}

/// Clustered population: points scattered around uniform centers, binned.
#[pyfunction]
#[pyo3(signature = (spread_sd=1.0, n_centers=5, points_per_center=50, width=20, height=20, seed=0))]
fn generate_clustered(
    spread_sd: f64,
    n_centers: usize,
    points_per_center: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> PyResult<PyGridFrame> {
    let spec = ClusterSpec {
        n_centers,
        points_per_center,
        spread_sd,
        width,
        height,
    };
    let (frame, _) = population::generate_clustered_frame(&spec, seed.into()).map_err(py_err)?;
    Ok(PyGridFrame { inner: frame })
}

/// Independent per-cell counts from `family` with the given mean and VMR.
#[pyfunction]
#[pyo3(signature = (family, mean, vmr=1.0, width=20, height=20, seed=0))]
fn generate_counts(family: &str, mean: f64, vmr: f64, width: usize, height: usize, seed: u64) -> PyResult<PyGridFrame> {
    let spec = DispersionSpec::new(family.parse().map_err(py_err)?, mean, vmr);
    let frame = population::generate_count_field(&spec, width, height, seed.into()).map_err(py_err)?;
    Ok(PyGridFrame { inner: frame })
}

/// Simple random sample of `m` cells: `{"unit_indices", "y_values"}`.
#[pyfunction]
#[pyo3(signature = (frame, m, seed=0))]
fn draw_srs<'py>(py: Python<'py>, frame: &PyGridFrame, m: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let s = acs_core::draw_srs(&frame.inner, m, seed.into()).map_err(py_err)?;
    to_py(py, &s)
}

/// ACS draw with its audit record: networks, edge units and final effort.
#[pyfunction]
#[pyo3(signature = (frame, n1, condition=0.0, neighborhood=4, seed=0))]
fn draw_acs<'py>(
    py: Python<'py>,
    frame: &PyGridFrame,
    n1: usize,
    condition: f64,
    neighborhood: u8,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let seed = RngSeed::from_seed(seed);
    let s = acs_core::draw_acs(&frame.inner, n1, self::condition(condition, neighborhood)?, seed).map_err(py_err)?;
    to_py(py, &io::acs_audit(&s, &frame.inner, seed))
}

/// Paired ACS and SRS estimates on shared initial units.
#[pyfunction]
#[pyo3(signature = (frame, n1=10, m=None, condition=0.0, neighborhood=4, seed=0))]
fn estimate<'py>(
    py: Python<'py>,
    frame: &PyGridFrame,
    n1: usize,
    m: Option<usize>,
    condition: f64,
    neighborhood: u8,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let f = &frame.inner;
    let (acs, srs) = draw_paired(
        f,
        n1,
        m.unwrap_or(n1),
        self::condition(condition, neighborhood)?,
        seed.into(),
    )
    .map_err(py_err)?;
    let reports = [
        estimators::estimate_acs(&acs, f.len()).map_err(py_err)?,
        estimators::estimate_srs(&srs, f.len()).map_err(py_err)?,
    ];
    to_py(py, &reports)
}

/// SRS estimate from explicitly chosen cells.
#[pyfunction]
fn estimate_srs_at<'py>(py: Python<'py>, frame: &PyGridFrame, indices: Vec<usize>) -> PyResult<Bound<'py, PyAny>> {
    if let Some(&bad) = indices.iter().find(|&&i| i >= frame.inner.len()) {
        return Err(PyValueError::new_err(format!("cell index {bad} is outside the frame")));
    }
    let mut sorted = indices.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(PyValueError::new_err("cell indices must be distinct"));
    }
    let s = SrsSample::from_indices(&frame.inner, indices);
    to_py(py, &estimators::estimate_srs(&s, frame.inner.len()).map_err(py_err)?)
}

/// Population-level efficiency of ACS (initial size `n1`) against SRS (`m`).
#[pyfunction]
#[pyo3(signature = (frame, n1=10, m=None, condition=0.0, neighborhood=4))]
fn efficiency_report<'py>(
    py: Python<'py>,
    frame: &PyGridFrame,
    n1: usize,
    m: Option<usize>,
    condition: f64,
    neighborhood: u8,
) -> PyResult<Bound<'py, PyAny>> {
    let p = partition_into_networks(&frame.inner, self::condition(condition, neighborhood)?);
    let r = efficiency::efficiency_report(&frame.inner, &p, n1, m.unwrap_or(n1)).map_err(py_err)?;
    to_py(py, &r)
}

#[pyfunction]
fn feasible_region<'py>(py: Python<'py>, population: usize, kappa1: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &efficiency::feasible_region(population, kappa1).map_err(py_err)?)
}

/// Replicated ACS vs SRS comparison on a clustered population.
#[pyfunction]
#[pyo3(signature = (spread_sd=1.0, n1=10, m=None, condition=0.0, replicates=100, seed=0, records=false))]
#[allow(clippy::too_many_arguments)]
fn run_comparison<'py>(
    py: Python<'py>,
    spread_sd: f64,
    n1: usize,
    m: Option<usize>,
    condition: f64,
    replicates: usize,
    seed: u64,
    records: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = ExperimentConfig::paper_default(seed);
    cfg.population = harness::PopulationSpec::Clustered(ClusterSpec::paper_default(spread_sd));
    cfg.n1 = n1;
    cfg.m = m.unwrap_or(n1);
    cfg.condition = condition;
    cfg.replicates = replicates;
    let mut result = py.detach(|| harness::run_replicated_comparison(&cfg)).map_err(py_err)?;
    if !records {
        result.records.clear();
    }
    to_py(py, &result)
}

/// Runs every sweep in a TOML config and returns the summary rows.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config_toml: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = ConfigFile::parse(config_toml).map_err(py_err)?.experiment();
    let sweeps = py.detach(|| harness::run_experiment(&cfg)).map_err(py_err)?;
    to_py(py, &ExperimentOutputs::new(sweeps).summary_rows())
}

#[pymodule]
fn acs_sampling(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGridFrame>()?;
    m.add_function(wrap_pyfunction!(generate_clustered, m)?)?;
    m.add_function(wrap_pyfunction!(generate_counts, m)?)?;
    m.add_function(wrap_pyfunction!(draw_srs, m)?)?;
    m.add_function(wrap_pyfunction!(draw_acs, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_srs_at, m)?)?;
    m.add_function(wrap_pyfunction!(efficiency_report, m)?)?;
    m.add_function(wrap_pyfunction!(feasible_region, m)?)?;
    m.add_function(wrap_pyfunction!(run_comparison, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
