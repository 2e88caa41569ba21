//! Python module `cycsig`: generate trajectories, build comparison spaces and
//! compute cycling signatures without leaving Python.
//!
//! ```python
//! import cycsig
//! traj = cycsig.Trajectory.generate("lorenz", points=20000)
//! space = cycsig.Space(traj)
//! rank, key = space.signature(start=0, length=300, radius=5.0)
//! ```

use std::path::PathBuf;

use cycling_signatures::cubical::ComparisonSpace;
use cycling_signatures::experiments::{Analysis, ExperimentPlan, FREQUENT_THRESHOLD};
use cycling_signatures::pipeline::{self, PipelineConfig};
use cycling_signatures::signatures::{Method, SignatureRecord, Signer};
use cycling_signatures::systems::{LiftedSeries, SystemKind, TimeSeries};
use cycling_signatures::Error;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn kind(name: &str) -> PyResult<SystemKind> {
    name.parse().map_err(err)
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A sampled trajectory of one of the reference systems.
#[pyclass(frozen)]
struct Trajectory {
    series: TimeSeries,
    kind: SystemKind,
}

#[pymethods]
impl Trajectory {
    /// Integrate `system` with its preset parameters. `seed` only matters for
    /// the stochastic double well.
    #[staticmethod]
    #[pyo3(signature = (system, points=None, seed=None, burn_in=None))]
    fn generate(py: Python<'_>, system: &str, points: Option<usize>, seed: Option<u64>, burn_in: Option<usize>) -> PyResult<Self> {
        let kind = kind(system)?;
        let mut cfg = PipelineConfig::preset(kind);
        cfg.trajectory.points = points.unwrap_or(cfg.trajectory.points);
        cfg.trajectory.seed = seed.unwrap_or(cfg.trajectory.seed);
        cfg.trajectory.burn_in = burn_in.unwrap_or(cfg.trajectory.burn_in);
        let (series, _) = py.detach(|| pipeline::generate(&cfg)).map_err(err)?;
        Ok(Trajectory { series, kind })
    }

    #[getter]
    fn system(&self) -> &'static str {
        self.kind.name()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.series.dim
    }

    fn __len__(&self) -> usize {
        self.series.len()
    }

    fn times(&self) -> Vec<f64> {
        self.series.times.clone()
    }

    /// Samples as a list of rows.
    fn points(&self) -> Vec<Vec<f64>> {
        self.series.states.chunks(self.series.dim).map(<[f64]>::to_vec).collect()
    }

    fn __repr__(&self) -> String {
        format!("Trajectory({}, {} points)", self.kind, self.series.len())
    }
}

/// Comparison space of a trajectory together with its lifted samples.
#[pyclass(frozen)]
struct Space {
    lifted: LiftedSeries,
    space: ComparisonSpace,
}

fn record_dict<'py>(py: Python<'py>, r: &SignatureRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("start", r.start)?;
    d.set_item("length", r.length)?;
    d.set_item("radius", r.radius)?;
    d.set_item("rank", r.rank())?;
    d.set_item("key", r.key())?;
    Ok(d)
}

fn parse_method(name: &str) -> PyResult<Method> {
    match name {
        "cycle-space" => Ok(Method::CycleSpace),
        "barcode" => Ok(Method::Barcode),
        other => Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    }
}

#[pymethods]
impl Space {
    /// Box size `r` and sphere subdivision `k` default to the system preset.
    #[new]
    #[pyo3(signature = (trajectory, r=None, k=None))]
    fn new(py: Python<'_>, trajectory: &Trajectory, r: Option<f64>, k: Option<u32>) -> PyResult<Self> {
        let mut cfg = PipelineConfig::preset(trajectory.kind);
        cfg.grid.r = r.unwrap_or(cfg.grid.r);
        cfg.grid.k = k.unwrap_or(cfg.grid.k);
        let (lifted, space) = py.detach(|| pipeline::build_space(&trajectory.series, &cfg)).map_err(err)?;
        Ok(Space { lifted, space })
    }

    #[getter]
    fn b1(&self) -> usize {
        self.space.b1()
    }

    #[getter]
    fn n_boxes(&self) -> usize {
        self.space.n_boxes()
    }

    /// `(rank, key)` of one segment at one evaluation radius.
    #[pyo3(signature = (start, length, radius, c=None, method="cycle-space"))]
    fn signature(&self, py: Python<'_>, start: usize, length: usize, radius: f64, c: Option<f64>, method: &str) -> PyResult<(usize, String)> {
        let method = parse_method(method)?;
        let rec = py
            .detach(|| Signer::new(&self.space, &self.lifted, c)?.with_method(method).signature(start, length, radius))
            .map_err(err)?;
        Ok((rec.rank(), rec.key()))
    }

    /// Signatures of randomly sampled segments, one dict per segment and radius.
    #[pyo3(signature = (radii, lengths="10:10:500", per_length=200, seed=0, c=None, threads=None))]
    fn signatures<'py>(
        &self,
        py: Python<'py>,
        radii: Vec<f64>,
        lengths: &str,
        per_length: usize,
        seed: u64,
        c: Option<f64>,
        threads: Option<usize>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let plan = ExperimentPlan { lengths: ExperimentPlan::parse_lengths(lengths).map_err(err)?, per_length, seed };
        plan.validate().map_err(err)?;
        let records = py
            .detach(|| pipeline::compute(&self.space, &self.lifted, &plan, &radii, c, Method::CycleSpace, threads))
            .map_err(err)?;
        records.iter().map(|r| record_dict(py, r)).collect()
    }

    /// Frequent signatures, onsets and inclusions at one radius, as a dict.
    #[pyo3(signature = (radius, lengths="10:10:500", per_length=200, seed=0, threshold=FREQUENT_THRESHOLD, onset_threshold=0.01))]
    #[allow(clippy::too_many_arguments)]
    fn analyze<'py>(
        &self,
        py: Python<'py>,
        radius: f64,
        lengths: &str,
        per_length: usize,
        seed: u64,
        threshold: f64,
        onset_threshold: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let plan = ExperimentPlan { lengths: ExperimentPlan::parse_lengths(lengths).map_err(err)?, per_length, seed };
        plan.validate().map_err(err)?;
        let analysis = py
            .detach(|| {
                let records = pipeline::compute(&self.space, &self.lifted, &plan, &[radius], None, Method::CycleSpace, None)?;
                Analysis::new(&records, self.space.b1(), threshold, onset_threshold)
            })
            .map_err(err)?;
        json_to_py(py, &analysis)
    }
}

/// Preset config of a system as TOML text.
#[pyfunction]
fn preset_config(system: &str) -> PyResult<String> {
    PipelineConfig::preset(kind(system)?).to_toml().map_err(err)
}

/// Run the whole pipeline from TOML text; returns the manifest as a dict.
#[pyfunction]
#[pyo3(signature = (config, output=None))]
fn run<'py>(py: Python<'py>, config: &str, output: Option<PathBuf>) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = PipelineConfig::from_toml(config).map_err(err)?;
    if let Some(o) = output {
        cfg.output = o;
    }
    let manifest = py.detach(|| pipeline::run(&cfg)).map_err(err)?;
    json_to_py(py, &manifest)
}

#[pymodule]
fn cycsig(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Trajectory>()?;
    m.add_class::<Space>()?;
    m.add_function(wrap_pyfunction!(preset_config, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
