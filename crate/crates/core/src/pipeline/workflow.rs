use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::logfile::{LogEntry, LogEvent, PredictionLog};
use super::scan::{anonymize_path, scan_input};
use super::{PipelineError, WorkflowConfig, WorkflowReport};
use crate::bench::ExecutionMode;
use crate::classifier::{
    predict_invocation, preprocess, ClassifierError, Invocation, ModelConfig, ModelHandle,
    ModelRegistry, Normalization, PredictionResult, Tensor,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Destination {
    Processed,
    Failed,
}

/// Terminal state of one image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Disposition {
    Succeeded,
    /// Succeeded after `attempts` total attempts.
    Retried { attempts: u32 },
    DeadLettered { attempts: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkflowEvent<'a> {
    BatchStarted { batch: usize, len: usize },
    Logged { image_id: &'a str, event: LogEvent },
    Moved { image_id: &'a str, destination: Destination },
    BatchFinished { batch: usize },
}

/// Receives every workflow event with a run-wide sequence number.
pub trait WorkflowObserver {
    fn observe(&mut self, seq: u64, event: &WorkflowEvent<'_>);
}

pub struct NoopObserver;

impl WorkflowObserver for NoopObserver {
    fn observe(&mut self, _: u64, _: &WorkflowEvent<'_>) {}
}

impl<F: FnMut(u64, &WorkflowEvent<'_>)> WorkflowObserver for F {
    fn observe(&mut self, seq: u64, event: &WorkflowEvent<'_>) {
        self(seq, event)
    }
}

struct Failure {
    class: &'static str,
    detail: String,
}

impl From<ClassifierError> for Failure {
    fn from(e: ClassifierError) -> Self {
        Self {
            class: e.class_name(),
            detail: e.to_string(),
        }
    }
}

fn io_failure(class: &'static str, e: &io::Error) -> Failure {
    Failure {
        class,
        detail: e.kind().to_string(),
    }
}

struct Item {
    path: PathBuf,
    id: String,
}

enum Stage {
    Classify,
    Relocate,
}

fn invocation_for(mode: ExecutionMode) -> Invocation {
    match mode {
        ExecutionMode::RpaUipath | ExecutionMode::RpaAutomationAnywhere => Invocation::Activity,
        ExecutionMode::SingletonSequential => Invocation::Single,
        ExecutionMode::SingletonBatch => Invocation::Batch,
    }
}

fn load_tensor(path: &Path, norm: &Normalization) -> Result<Tensor, Failure> {
    let bytes = fs::read(path).map_err(|e| io_failure("ReadFailed", &e))?;
    let img = image::load_from_memory(&bytes)
        .map_err(|e| Failure::from(ClassifierError::MalformedImage(e.to_string())))?
        .to_rgb8();
    Ok(preprocess((&img).into(), norm)?)
}

fn load_tensors(items: &[Item], norm: &Normalization, parallel: bool) -> Vec<Result<Tensor, Failure>> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    if !parallel || items.len() < 2 || threads < 2 {
        return items.iter().map(|it| load_tensor(&it.path, norm)).collect();
    }
    let per = items.len().div_ceil(threads);
    std::thread::scope(|s| {
        let workers: Vec<_> = items
            .chunks(per)
            .map(|chunk| s.spawn(move || chunk.iter().map(|it| load_tensor(&it.path, norm)).collect::<Vec<_>>()))
            .collect();
        workers
            .into_iter()
            .flat_map(|w| w.join().expect("preprocess worker panicked"))
            .collect()
    })
}

/// Rename, falling back to copy-then-delete when rename is refused (for
/// example across filesystems).
fn relocate(src: &Path, dir: &Path) -> io::Result<PathBuf> {
    let name = src
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "no file name"))?;
    let dst = dir.join(name);
    match fs::rename(src, &dst) {
        Ok(()) => Ok(dst),
        Err(rename_err) => {
            if fs::copy(src, &dst).is_err() {
                return Err(rename_err);
            }
            fs::remove_file(src)?;
            Ok(dst)
        }
    }
}

fn ensure_writable(dir: &Path, role: &'static str) -> Result<(), PipelineError> {
    let unwritable = |e: io::Error| {
        ::log::error!("{role} directory is not writable: {}", e.kind());
        PipelineError::DirUnwritable {
            role,
            reason: e.kind().to_string(),
        }
    };
    fs::create_dir_all(dir).map_err(unwritable)?;
    let probe = dir.join(".lesionbatch-write-probe");
    fs::write(&probe, b"").map_err(unwritable)?;
    fs::remove_file(&probe).map_err(unwritable)?;
    Ok(())
}

struct Runner<'a> {
    cfg: &'a WorkflowConfig,
    registry: &'a ModelRegistry,
    model_cfg: &'a ModelConfig,
    model: Option<ModelHandle>,
    log: PredictionLog,
    observer: &'a mut dyn WorkflowObserver,
    seq: u64,
    succeeded: usize,
    failed: usize,
    retries: usize,
}

impl Runner<'_> {
    fn emit(&mut self, event: WorkflowEvent<'_>) {
        self.seq += 1;
        self.observer.observe(self.seq, &event);
    }

    fn write_log(&mut self, entry: LogEntry) -> Result<(), PipelineError> {
        self.log.append(&entry).map_err(PipelineError::Log)?;
        self.emit(WorkflowEvent::Logged {
            image_id: &entry.image_id,
            event: entry.event,
        });
        Ok(())
    }

    fn log_prediction(&mut self, item: &Item, pred: &PredictionResult, attempt: u32) -> Result<(), PipelineError> {
        let mut e = LogEntry::now(&item.id, LogEvent::Predicted, pred.elapsed_s * 1e3, attempt);
        e.predicted_label = Some(pred.predicted_label.clone());
        e.confidence = Some(pred.confidence());
        self.write_log(e)
    }

    fn log_failure(&mut self, item: &Item, event: LogEvent, failure: &Failure, attempt: u32) -> Result<(), PipelineError> {
        ::log::debug!("image {} attempt {attempt}: {}", item.id, failure.detail);
        let mut e = LogEntry::now(&item.id, event, 0.0, attempt);
        e.error = Some(failure.class.to_string());
        self.write_log(e)
    }

    fn move_to(&mut self, item: &Item, destination: Destination) -> Result<(), Failure> {
        let dir = match destination {
            Destination::Processed => &self.cfg.processed_dir,
            Destination::Failed => &self.cfg.failed_dir,
        };
        relocate(&item.path, dir).map_err(|e| io_failure("MoveFailed", &e))?;
        self.emit(WorkflowEvent::Moved {
            image_id: &item.id,
            destination,
        });
        Ok(())
    }

    /// Resident model for v1/v2; a fresh load per image in RPA modes.
    fn model_for_image(&mut self) -> Result<ModelHandle, ClassifierError> {
        if self.cfg.mode.is_rpa() {
            self.registry.reset();
            return self.registry.acquire(self.model_cfg);
        }
        match &self.model {
            Some(m) => Ok(m.clone()),
            None => {
                let m = self.registry.acquire(self.model_cfg)?;
                self.model = Some(m.clone());
                Ok(m)
            }
        }
    }

    fn classify_single(&mut self, item: &Item) -> Result<PredictionResult, Failure> {
        let model = self.model_for_image()?;
        let t = load_tensor(&item.path, model.normalization())?;
        let mut out = predict_invocation(&model, std::slice::from_ref(&t), invocation_for(self.cfg.mode), 0)?;
        Ok(out.pop().expect("one result"))
    }

    fn classify_chunk(&mut self, items: &[Item]) -> Vec<Result<PredictionResult, Failure>> {
        if items.len() == 1 {
            return vec![self.classify_single(&items[0])];
        }
        let model = match self.model_for_image() {
            Ok(m) => m,
            Err(e) => return items.iter().map(|_| Err(Failure::from(e.clone()))).collect(),
        };
        let mut slots = Vec::with_capacity(items.len());
        let mut ok_tensors = Vec::new();
        for t in load_tensors(items, model.normalization(), self.cfg.intra_batch_parallelism) {
            slots.push(match t {
                Ok(t) => {
                    ok_tensors.push(t);
                    None
                }
                Err(f) => Some(f),
            });
        }
        let mut preds = match predict_invocation(&model, &ok_tensors, invocation_for(self.cfg.mode), 0) {
            Ok(p) => p.into_iter().map(Ok).collect::<Vec<_>>(),
            Err(e) => ok_tensors.iter().map(|_| Err(Failure::from(e.clone()))).collect(),
        }
        .into_iter();
        slots
            .into_iter()
            .map(|slot| match slot {
                None => preds.next().expect("one prediction per tensor"),
                Some(f) => Err(f),
            })
            .collect()
    }

    /// Retry up to `retry_limit` times, then dead-letter.
    fn handle_failure(&mut self, item: &Item, error: Failure, mut stage: Stage) -> Result<Disposition, PipelineError> {
        let mut attempt = 1;
        let mut last = error;
        while attempt <= self.cfg.retry_limit {
            self.log_failure(item, LogEvent::Retry, &last, attempt)?;
            self.retries += 1;
            attempt += 1;
            if let Stage::Classify = stage {
                match self.classify_single(item) {
                    Ok(pred) => {
                        self.log_prediction(item, &pred, attempt)?;
                        stage = Stage::Relocate;
                    }
                    Err(f) => {
                        last = f;
                        continue;
                    }
                }
            }
            match self.move_to(item, Destination::Processed) {
                Ok(()) => return Ok(Disposition::Retried { attempts: attempt }),
                Err(f) => last = f,
            }
        }
        self.log_failure(item, LogEvent::DeadLetter, &last, attempt)?;
        self.move_to(item, Destination::Failed).map_err(|f| {
            ::log::error!("failed directory is not writable: {}", f.detail);
            PipelineError::DirUnwritable {
                role: "failed",
                reason: f.detail,
            }
        })?;
        Ok(Disposition::DeadLettered { attempts: attempt })
    }

    fn settle(&mut self, item: &Item, outcome: Result<PredictionResult, Failure>) -> Result<Disposition, PipelineError> {
        let disposition = match outcome {
            Ok(pred) => {
                self.log_prediction(item, &pred, 1)?;
                match self.move_to(item, Destination::Processed) {
                    Ok(()) => Disposition::Succeeded,
                    Err(f) => self.handle_failure(item, f, Stage::Relocate)?,
                }
            }
            Err(f) => self.handle_failure(item, f, Stage::Classify)?,
        };
        match disposition {
            Disposition::DeadLettered { .. } => self.failed += 1,
            _ => self.succeeded += 1,
        }
        Ok(disposition)
    }
}

pub fn run_workflow(
    cfg: &WorkflowConfig,
    registry: &ModelRegistry,
    model_cfg: &ModelConfig,
) -> Result<WorkflowReport, PipelineError> {
    run_workflow_observed(cfg, registry, model_cfg, &mut NoopObserver)
}

/// Run the workflow, reporting every log write, file move and batch
/// boundary to `observer`.
pub fn run_workflow_observed(
    cfg: &WorkflowConfig,
    registry: &ModelRegistry,
    model_cfg: &ModelConfig,
    observer: &mut dyn WorkflowObserver,
) -> Result<WorkflowReport, PipelineError> {
    let started = Instant::now();
    cfg.validate()?;
    let scan = scan_input(&cfg.input_dir)?;
    ensure_writable(&cfg.processed_dir, "processed")?;
    ensure_writable(&cfg.failed_dir, "failed")?;
    let log = PredictionLog::open(&cfg.log_path).map_err(PipelineError::Log)?;

    let mut runner = Runner {
        cfg,
        registry,
        model_cfg,
        model: None,
        log,
        observer,
        seq: 0,
        succeeded: 0,
        failed: 0,
        retries: 0,
    };
    if !cfg.mode.is_rpa() {
        runner.model = Some(registry.acquire(model_cfg)?);
    }

    let items: Vec<Item> = scan
        .images
        .iter()
        .map(|p| Item {
            id: anonymize_path(p, &cfg.anonymization_salt),
            path: p.clone(),
        })
        .collect();
    for (batch, chunk) in items.chunks(cfg.mode.chunk_size(cfg.batch_size)).enumerate() {
        runner.emit(WorkflowEvent::BatchStarted {
            batch,
            len: chunk.len(),
        });
        let outcomes = runner.classify_chunk(chunk);
        for (item, outcome) in chunk.iter().zip(outcomes) {
            runner.settle(item, outcome)?;
        }
        runner.emit(WorkflowEvent::BatchFinished { batch });
    }

    Ok(WorkflowReport {
        scanned: items.len(),
        succeeded: runner.succeeded,
        failed: runner.failed,
        retries: runner.retries,
        ignored: scan.ignored,
        log_path: cfg.log_path.clone(),
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}
