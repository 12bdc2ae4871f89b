//! Emulated benchmark of the four pipeline variants: closed-form timing,
//! calibration, measured runs, projections and the accessibility frontier.

mod calibrate;
mod measure;
mod pareto;
mod projection;
mod report;
mod timing;

use thiserror::Error;

use crate::pipeline::PipelineError;

pub use calibrate::{
    calibrate_timing_model, fit_overhead_split, max_relative_error, Calibration, CalibrationRoute,
    FolderTargets, Preset, REFERENCE_BATCH_SIZE, REFERENCE_IMAGES, RPA_INFERENCE_SHARE,
};
pub use measure::{measure_run, MeasureOptions};
pub use pareto::{
    emit_pareto, is_monotone_frontier, non_dominated, parse_pareto_table, pareto_table,
    ParetoPoint, PARETO_HEADER,
};
pub use projection::{project_cost, EfficiencyComparison, Projection, CLAIMED_EFFICIENCY};
pub use report::{
    attach_speedups, decompose_overhead, render_summary, report_table, simulate_reports,
    trim_float, write_report, BenchReport, REPORT_COLUMNS,
};
pub use timing::{simulate_folder_time, ExecutionMode, TimingModel};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown mode `{0}` (expected rpa-uipath-emulated, rpa-aa-emulated, v1-singleton-sequential, v2-singleton-batch or all)")]
    UnknownMode(String),
    #[error("unknown preset `{0}` (expected table1-exact or overhead-78)")]
    UnknownPreset(String),
    #[error("CalibrationInfeasible: {parameter} would be {value}")]
    CalibrationInfeasible { parameter: String, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("benchmark runs are single-threaded; disable intra-batch parallelism")]
    ParallelismEnabled,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Model(#[from] crate::classifier::ClassifierError),
    #[error("expected {expected} model loads in {mode}, observed {observed}")]
    LoadEventMismatch {
        mode: ExecutionMode,
        expected: u64,
        observed: u64,
    },
    #[error("measured run left {failed} of {total} images unclassified")]
    RunIncomplete { failed: usize, total: usize },
}
