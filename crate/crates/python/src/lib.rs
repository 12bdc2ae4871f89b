//! Python bindings: `import lesionbatch`.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use lesionbatch::bench::{self, ExecutionMode, Preset, TimingModel};
use lesionbatch::classifier::{self, ClassTaxonomy, ModelConfig, ModelHandle, Tensor};
use lesionbatch::dataprep;
use lesionbatch::pipeline::{self, WorkflowConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_mode(mode: &str) -> PyResult<ExecutionMode> {
    mode.parse().map_err(value_err)
}

fn parse_preset(preset: &str) -> PyResult<Preset> {
    preset.parse().map_err(value_err)
}

/// Default 16-subtype taxonomy labels, in class-index order.
#[pyfunction]
fn class_labels() -> Vec<String> {
    ClassTaxonomy::default().subtypes().to_vec()
}

#[pyclass(name = "TimingModel", frozen, from_py_object)]
#[derive(Clone)]
struct PyTimingModel {
    inner: TimingModel,
}

#[pymethods]
impl PyTimingModel {
    #[new]
    fn new(
        load_s: f64,
        rpa_overhead_uipath_s: f64,
        rpa_overhead_aa_s: f64,
        call_overhead_s: f64,
        batch_overhead_s: f64,
        infer_s: f64,
    ) -> PyResult<Self> {
        let inner = TimingModel {
            load_s,
            rpa_overhead_uipath_s,
            rpa_overhead_aa_s,
            call_overhead_s,
            batch_overhead_s,
            infer_s,
        };
        inner.validate().map_err(value_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (name = "table1-exact"))]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(Self {
            inner: parse_preset(name)?.timing_model(),
        })
    }

    fn as_dict(&self) -> Vec<(&'static str, f64)> {
        self.inner.fields().to_vec()
    }

    #[pyo3(signature = (mode, n, batch_size = 32))]
    fn folder_time(&self, mode: &str, n: usize, batch_size: usize) -> PyResult<f64> {
        Ok(bench::simulate_folder_time(parse_mode(mode)?, n, &self.inner, batch_size))
    }

    fn __repr__(&self) -> String {
        let fields: Vec<String> = self.inner.fields().iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("TimingModel({})", fields.join(", "))
    }
}

#[pyclass(name = "BenchReport", frozen, skip_from_py_object)]
struct PyBenchReport {
    #[pyo3(get)]
    mode: String,
    #[pyo3(get)]
    n_images: usize,
    #[pyo3(get)]
    folder_time_s: f64,
    #[pyo3(get)]
    avg_per_image_s: f64,
    #[pyo3(get)]
    overhead_fraction: f64,
    #[pyo3(get)]
    inference_fraction: f64,
    #[pyo3(get)]
    speedups: Vec<(String, f64)>,
    #[pyo3(get)]
    measured: bool,
    #[pyo3(get)]
    load_events: Option<u64>,
}

impl From<bench::BenchReport> for PyBenchReport {
    fn from(r: bench::BenchReport) -> Self {
        Self {
            mode: r.mode.to_string(),
            n_images: r.n_images,
            folder_time_s: r.folder_time_s,
            avg_per_image_s: r.avg_per_image_s,
            overhead_fraction: r.overhead_fraction,
            inference_fraction: r.inference_fraction,
            speedups: r.speedups.iter().map(|(m, v)| (m.to_string(), *v)).collect(),
            measured: r.measured,
            load_events: r.load_events,
        }
    }
}

#[pymethods]
impl PyBenchReport {
    fn __repr__(&self) -> String {
        format!(
            "BenchReport(mode={}, n_images={}, folder_time_s={}, avg_per_image_s={})",
            self.mode, self.n_images, self.folder_time_s, self.avg_per_image_s
        )
    }
}

/// Closed-form reports for the given modes (default: all four).
#[pyfunction]
#[pyo3(signature = (n = 31, modes = "all", preset = "table1-exact", batch_size = 32))]
fn simulate(n: usize, modes: &str, preset: &str, batch_size: usize) -> PyResult<Vec<PyBenchReport>> {
    let modes = ExecutionMode::parse_list(modes).map_err(value_err)?;
    let tm = parse_preset(preset)?.timing_model();
    Ok(bench::simulate_reports(&modes, n, &tm, batch_size)
        .into_iter()
        .map(Into::into)
        .collect())
}

/// Run the real workflow over `n` synthetic images with emulated latencies.
#[pyfunction]
#[pyo3(signature = (mode, n = 31, preset = "table1-exact", time_scale = 0.01, seed = 42))]
fn measure(mode: &str, n: usize, preset: &str, time_scale: f64, seed: u64) -> PyResult<PyBenchReport> {
    let mode = parse_mode(mode)?;
    let tm = parse_preset(preset)?.timing_model();
    let taxonomy = ClassTaxonomy::default();
    let counts = dataprep::uniform_counts(&taxonomy, n.div_ceil(taxonomy.len()));
    let mut records = dataprep::generate_synthetic_dataset(&taxonomy, &counts, seed).map_err(value_err)?;
    records.truncate(n);
    let opts = bench::MeasureOptions {
        time_scale,
        ..Default::default()
    };
    bench::measure_run(mode, &records, &ModelConfig::reference(taxonomy), &tm, &opts)
        .map(Into::into)
        .map_err(runtime_err)
}

/// `(seconds, minutes, hours)` for `n` images at `avg_per_image_s`.
#[pyfunction]
fn project(avg_per_image_s: f64, n: usize) -> (f64, f64, f64) {
    let p = bench::project_cost(avg_per_image_s, n);
    (p.seconds, p.minutes(), p.hours())
}

/// `(mode, accessibility, avg_per_image_s)` tuples.
#[pyfunction]
fn pareto() -> Vec<(String, f64, f64)> {
    bench::emit_pareto()
        .into_iter()
        .map(|p| (p.mode.to_string(), p.accessibility, p.avg_per_image_s))
        .collect()
}

/// A loaded reference classifier; predictions take HxWx3 uint8 pixel lists
/// flattened row-major.
#[pyclass(name = "Classifier", frozen, skip_from_py_object)]
struct PyClassifier {
    handle: ModelHandle,
    registry: &'static classifier::ModelRegistry,
}

fn to_tensor(handle: &ModelHandle, pixels: Vec<u8>, width: usize, height: usize) -> PyResult<Tensor> {
    let view = classifier::ImageView {
        width,
        height,
        channels: 3,
        data: &pixels,
    };
    classifier::preprocess(view, handle.normalization()).map_err(value_err)
}

#[pymethods]
impl PyClassifier {
    /// Acquire the process-wide model, loading it on first use.
    #[new]
    fn new() -> PyResult<Self> {
        let registry = classifier::ModelRegistry::global();
        let handle = registry
            .acquire(&ModelConfig::reference(ClassTaxonomy::default()))
            .map_err(runtime_err)?;
        Ok(Self { handle, registry })
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.handle.class_labels().to_vec()
    }

    #[getter]
    fn load_events(&self) -> u64 {
        self.registry.load_events()
    }

    /// `(label, confidence, probabilities)` for one image.
    fn predict(&self, pixels: Vec<u8>, width: usize, height: usize) -> PyResult<(String, f64, Vec<f64>)> {
        let t = to_tensor(&self.handle, pixels, width, height)?;
        let r = classifier::predict_one(&self.handle, &t).map_err(runtime_err)?;
        Ok((r.predicted_label.clone(), r.confidence(), r.probabilities))
    }

    /// Labels for several equally sized images, predicted in batches.
    #[pyo3(signature = (images, width, height, batch_size = 32))]
    fn predict_batch(
        &self,
        images: Vec<Vec<u8>>,
        width: usize,
        height: usize,
        batch_size: usize,
    ) -> PyResult<Vec<String>> {
        let tensors = images
            .into_iter()
            .map(|p| to_tensor(&self.handle, p, width, height))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(classifier::predict_batch(&self.handle, &tensors, batch_size)
            .map_err(runtime_err)?
            .into_iter()
            .map(|r| r.predicted_label)
            .collect())
    }
}

/// Classify every image in `input_dir`; returns `(scanned, succeeded, failed, retries)`.
#[pyfunction]
#[pyo3(signature = (root, mode = "v2-singleton-batch", batch_size = 32, salt = ""))]
fn run_workflow(root: PathBuf, mode: &str, batch_size: usize, salt: &str) -> PyResult<(usize, usize, usize, usize)> {
    let mut cfg = WorkflowConfig::under_root(&root, parse_mode(mode)?);
    cfg.batch_size = batch_size;
    cfg.anonymization_salt = salt.to_string();
    let r = pipeline::run_workflow(
        &cfg,
        &classifier::ModelRegistry::new(),
        &ModelConfig::reference(ClassTaxonomy::default()),
    )
    .map_err(runtime_err)?;
    Ok((r.scanned, r.succeeded, r.failed, r.retries))
}

/// Write `per_class` synthetic PNGs per class into `dir`; returns their labels in file order.
#[pyfunction]
#[pyo3(signature = (dir, per_class, seed = 42))]
fn write_synthetic_images(dir: PathBuf, per_class: usize, seed: u64) -> PyResult<Vec<String>> {
    let taxonomy = ClassTaxonomy::default();
    let records = dataprep::generate_synthetic_dataset(&taxonomy, &dataprep::uniform_counts(&taxonomy, per_class), seed)
        .map_err(value_err)?;
    std::fs::create_dir_all(&dir).map_err(runtime_err)?;
    for (i, r) in records.iter().enumerate() {
        r.pixels.save(dir.join(format!("img_{i:04}.png"))).map_err(runtime_err)?;
    }
    Ok(records.into_iter().map(|r| r.label).collect())
}

#[pymodule(name = "lesionbatch")]
fn lesionbatch_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTimingModel>()?;
    m.add_class::<PyBenchReport>()?;
    m.add_class::<PyClassifier>()?;
    m.add_function(wrap_pyfunction!(class_labels, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(measure, m)?)?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(pareto, m)?)?;
    m.add_function(wrap_pyfunction!(run_workflow, m)?)?;
    m.add_function(wrap_pyfunction!(write_synthetic_images, m)?)?;
    Ok(())
}
