//! File-based classification workflow: scan a folder once, classify in
//! sequential batches, log each image, then move it to `processed/` or,
//! after exhausting retries, to `failed/`.

mod logfile;
mod scan;
mod workflow;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::bench::ExecutionMode;
use crate::classifier::{ClassifierError, DEFAULT_BATCH_SIZE};

pub use logfile::{read_log, LogEntry, LogEvent, PredictionLog};
pub use scan::{anonymize_path, is_image_path, scan_input, ScanResult, IMAGE_EXTENSIONS};
pub use workflow::{
    run_workflow, run_workflow_observed, Destination, Disposition, NoopObserver, WorkflowEvent,
    WorkflowObserver,
};

pub const DEFAULT_RETRY_LIMIT: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("DirUnreadable: {role} directory is not readable ({reason})")]
    DirUnreadable { role: &'static str, reason: String },
    #[error("DirUnwritable: {role} directory is not writable ({reason})")]
    DirUnwritable { role: &'static str, reason: String },
    #[error("invalid workflow configuration: {0}")]
    InvalidConfig(String),
    #[error("model unavailable: {0}")]
    Model(#[from] ClassifierError),
    #[error("prediction log: {0}")]
    Log(std::io::Error),
}

#[derive(Debug, Clone)]
pub struct WorkflowConfig {
    pub input_dir: PathBuf,
    pub processed_dir: PathBuf,
    pub failed_dir: PathBuf,
    pub log_path: PathBuf,
    pub mode: ExecutionMode,
    pub batch_size: usize,
    pub retry_limit: u32,
    pub anonymization_salt: String,
    /// Preprocess the images of one batch on several threads. Log and move
    /// order stay in input order either way.
    pub intra_batch_parallelism: bool,
}

impl WorkflowConfig {
    /// `input/`, `processed/`, `failed/` and `logs/predictions.log` under `root`.
    pub fn under_root(root: &Path, mode: ExecutionMode) -> Self {
        Self {
            input_dir: root.join("input"),
            processed_dir: root.join("processed"),
            failed_dir: root.join("failed"),
            log_path: root.join("logs").join("predictions.log"),
            mode,
            batch_size: DEFAULT_BATCH_SIZE,
            retry_limit: DEFAULT_RETRY_LIMIT,
            anonymization_salt: String::new(),
            intra_batch_parallelism: false,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let dirs = [&self.input_dir, &self.processed_dir, &self.failed_dir];
        for (i, a) in dirs.iter().enumerate() {
            for b in &dirs[i + 1..] {
                if a == b {
                    return Err(PipelineError::InvalidConfig(
                        "input, processed and failed directories must be distinct".into(),
                    ));
                }
            }
        }
        if self.batch_size == 0 {
            return Err(PipelineError::InvalidConfig("batch_size must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkflowReport {
    pub scanned: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub retries: usize,
    /// Non-image files left in the input directory.
    pub ignored: usize,
    pub log_path: PathBuf,
    pub wall_time_s: f64,
}

impl std::fmt::Display for WorkflowReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "scanned    {}", self.scanned)?;
        writeln!(f, "succeeded  {}", self.succeeded)?;
        writeln!(f, "failed     {}", self.failed)?;
        writeln!(f, "retries    {}", self.retries)?;
        writeln!(f, "ignored    {}", self.ignored)?;
        write!(f, "wall time  {:.3} s", self.wall_time_s)
    }
}
