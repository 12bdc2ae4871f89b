use std::sync::Arc;
use std::time::Instant;

use super::{BenchError, BenchReport, ExecutionMode, TimingModel};
use crate::classifier::{
    prewarm_tensor_buffers, BackendSpec, DelayStrategy, ModelConfig, ModelRegistry, Pacer,
    ReferenceWeights, SimulatedSpec, DEFAULT_BATCH_SIZE,
};
use crate::dataprep::ImageRecord;
use crate::pipeline::{run_workflow, WorkflowConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureOptions {
    /// Wall seconds per model second.
    pub time_scale: f64,
    pub strategy: DelayStrategy,
    pub batch_size: usize,
    pub intra_batch_parallelism: bool,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            time_scale: 1.0,
            strategy: DelayStrategy::Sleep,
            batch_size: DEFAULT_BATCH_SIZE,
            intra_batch_parallelism: false,
        }
    }
}

/// Run the real workflow over `records` written as PNG files, with every
/// emulated latency from `tm` realized on a scaled clock. The reported
/// folder time is unscaled back to model seconds.
///
/// Only the taxonomy and normalization of `model_cfg` are used; the backend
/// is always the simulated one, loaded through a private registry.
pub fn measure_run(
    mode: ExecutionMode,
    records: &[ImageRecord],
    model_cfg: &ModelConfig,
    tm: &TimingModel,
    opts: &MeasureOptions,
) -> Result<BenchReport, BenchError> {
    if opts.intra_batch_parallelism {
        return Err(BenchError::ParallelismEnabled);
    }
    if !(opts.time_scale > 0.0) || !opts.time_scale.is_finite() {
        return Err(BenchError::InvalidParameter(format!(
            "time_scale must be positive, got {}",
            opts.time_scale
        )));
    }
    tm.validate()?;

    let root = tempfile::tempdir()?;
    let mut wf = WorkflowConfig::under_root(root.path(), mode);
    wf.batch_size = opts.batch_size;
    std::fs::create_dir_all(&wf.input_dir)?;
    for (i, rec) in records.iter().enumerate() {
        rec.pixels
            .save(wf.input_dir.join(format!("img_{i:04}.png")))
            .map_err(|e| BenchError::Io(std::io::Error::other(e)))?;
    }

    let pacer = Arc::new(Pacer::new(opts.time_scale, opts.strategy));
    let cfg = model_cfg.clone().with_backend(BackendSpec::Simulated(SimulatedSpec {
        latency: tm.latency_profile(mode),
        pacer: pacer.clone(),
    }));
    let registry = ModelRegistry::new();
    // Prepared before the clock starts.
    ReferenceWeights::shared(&cfg.taxonomy, &cfg.normalization)?;
    prewarm_tensor_buffers(mode.chunk_size(opts.batch_size).min(records.len()));

    let started = Instant::now();
    pacer.restart(started);
    let run = run_workflow(&wf, &registry, &cfg)?;
    let wall = started.elapsed().as_secs_f64();

    if run.failed > 0 {
        return Err(BenchError::RunIncomplete {
            failed: run.failed,
            total: run.scanned,
        });
    }
    let expected = if mode.is_rpa() { records.len() as u64 } else { 1 };
    let observed = registry.load_events();
    if observed != expected {
        return Err(BenchError::LoadEventMismatch {
            mode,
            expected,
            observed,
        });
    }

    let mut report = BenchReport::new(mode, records.len(), wall / opts.time_scale, tm);
    report.measured = true;
    report.load_events = Some(observed);
    log::debug!(
        "{mode}: {} images in {wall:.4} s wall, schedule {:.4} s",
        records.len(),
        pacer.planned().as_secs_f64()
    );
    Ok(report)
}
