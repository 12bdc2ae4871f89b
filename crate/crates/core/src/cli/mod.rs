//! Command-line surface: `prep`, `run`, `bench`, `project` and `pareto`.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error.

mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::bench::{
    self, emit_pareto, measure_run, pareto_table, project_cost, render_summary, simulate_reports,
    write_report, BenchError, EfficiencyComparison, ExecutionMode, MeasureOptions, Preset,
    CLAIMED_EFFICIENCY,
};
use crate::classifier::{
    BackendKind, BackendSpec, ClassifierError, ModelConfig, ModelRegistry, Pacer, SimulatedSpec,
};
use crate::dataprep::{
    build_training_set, generate_synthetic_dataset, stratified_split, uniform_counts,
    write_dataset, DataprepError, Origin, OVERSAMPLE_THRESHOLD,
};
use crate::pipeline::{run_workflow, PipelineError, WorkflowConfig};

pub use config::{Config, NormalizationConfig, TaxonomyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Dataprep(#[from] DataprepError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error("{0}")]
    Usage(String),
    #[error("{failed} image(s) dead-lettered")]
    Failures { failed: usize },
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            _ => EXIT_DOMAIN,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lesionbatch", version, about = "Batch lesion classification workflow and emulated RPA benchmark")]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Random seed (overrides config `seed`, default 42).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate, split, oversample and augment a synthetic dataset.
    Prep(PrepArgs),
    /// Classify every image in a folder.
    Run(RunArgs),
    /// Simulate and measure the four pipeline variants.
    Bench(BenchArgs),
    /// Extrapolate per-image times to a larger workload.
    Project(ProjectArgs),
    /// Print the accessibility versus per-image time points.
    Pareto(ParetoArgs),
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    /// Records per class: one number for every class, or LABEL=N pairs
    /// separated by commas.
    #[arg(long, default_value = "10")]
    pub counts: String,
    /// Output directory [default: <workspace>/dataset].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Input folder [default: <workspace>/input].
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Execution mode.
    #[arg(long, default_value = "v2-singleton-batch")]
    pub mode: ExecutionMode,
    /// Workspace root for processed/, failed/ and logs/ (overrides config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Inference batch size (overrides config, default 32).
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Exit 0 even when images were dead-lettered.
    #[arg(long)]
    pub allow_failures: bool,
    /// Wall seconds per model second for the simulated backend (overrides config, default 0.01).
    #[arg(long)]
    pub time_scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Images per folder.
    #[arg(long, default_value_t = 31)]
    pub n: usize,
    /// Comma-separated modes, or `all`.
    #[arg(long, default_value = "all")]
    pub mode: String,
    /// Calibration preset (overrides config, default table1-exact).
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Wall seconds per model second for measured runs (overrides config, default 0.01).
    #[arg(long)]
    pub time_scale: Option<f64>,
    /// Directory for report.tsv, measured.tsv and pareto.tsv [default: <workspace>/bench].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Skip the measured runs.
    #[arg(long)]
    pub simulate_only: bool,
    /// Workload size for the printed projections.
    #[arg(long, default_value_t = 2500)]
    pub project_n: usize,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Comma-separated seconds per image [default: the preset's UiPath and
    /// v2 averages, rounded to 2 decimals].
    #[arg(long)]
    pub avg: Option<String>,
    /// Workload size.
    #[arg(long, default_value_t = 2500)]
    pub n: usize,
    /// Preset used for the default averages.
    #[arg(long)]
    pub preset: Option<Preset>,
}

#[derive(Debug, Args)]
pub struct ParetoArgs {
    /// Also write the table to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse `args`, run the command and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli, &mut stdout.lock()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Run a parsed command, writing human-readable output to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::Prep(a) => cmd_prep(&cfg, a, out).map(|_| ()),
        Command::Run(a) => cmd_run(&cfg, a, out),
        Command::Bench(a) => cmd_bench(&cfg, a, out),
        Command::Project(a) => cmd_project(&cfg, a, out),
        Command::Pareto(a) => cmd_pareto(a, out),
    }
}

fn parse_counts(spec: &str, cfg: &Config) -> Result<BTreeMap<String, usize>, CliError> {
    let spec = spec.trim();
    if let Ok(n) = spec.parse::<usize>() {
        return Ok(uniform_counts(&cfg.taxonomy()?, n));
    }
    let mut counts = BTreeMap::new();
    for pair in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (label, n) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--counts: expected LABEL=N, got `{pair}`")))?;
        let n = n
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--counts: `{n}` is not a count")))?;
        counts.insert(label.trim().to_string(), n);
    }
    Ok(counts)
}

pub fn cmd_prep(cfg: &Config, a: &PrepArgs, out: &mut dyn Write) -> Result<PathBuf, CliError> {
    let taxonomy = cfg.taxonomy()?;
    let counts = parse_counts(&a.counts, cfg)?;
    let records = generate_synthetic_dataset(&taxonomy, &counts, cfg.seed)?;
    let split = stratified_split(records, cfg.seed)?;
    let training = build_training_set(&split, &taxonomy, OVERSAMPLE_THRESHOLD, cfg.seed)?;
    let dir = a.out.clone().unwrap_or_else(|| cfg.workspace.join("dataset"));
    let manifest = write_dataset(&dir, &training.records, &split.validation, &split.test)?;

    #[derive(Default)]
    struct Row {
        train: usize,
        duplicated: usize,
        augmented: usize,
        validation: usize,
        test: usize,
    }
    let mut rows: BTreeMap<&str, Row> = BTreeMap::new();
    for r in &training.records {
        let row = rows.entry(r.label.as_str()).or_default();
        match r.origin {
            Origin::Duplicated => row.duplicated += 1,
            Origin::Augmented => row.augmented += 1,
            _ => row.train += 1,
        }
    }
    for r in &split.validation {
        rows.entry(r.label.as_str()).or_default().validation += 1;
    }
    for r in &split.test {
        rows.entry(r.label.as_str()).or_default().test += 1;
    }
    writeln!(out, "{:<16}{:>8}{:>8}{:>8}{:>8}{:>8}", "class", "train", "dup", "aug", "val", "test")?;
    for label in taxonomy.subtypes() {
        if let Some(r) = rows.get(label.as_str()) {
            writeln!(
                out,
                "{label:<16}{:>8}{:>8}{:>8}{:>8}{:>8}",
                r.train, r.duplicated, r.augmented, r.validation, r.test
            )?;
        }
    }
    writeln!(out, "manifest: {}", manifest.display())?;
    Ok(manifest)
}

fn model_config(cfg: &Config, mode: ExecutionMode, time_scale: f64) -> Result<ModelConfig, CliError> {
    let mut mc = ModelConfig::reference(cfg.taxonomy()?);
    mc.normalization = cfg.normalization()?;
    mc.backend = match cfg.backend {
        BackendKind::Reference => BackendSpec::Reference,
        BackendKind::Simulated => BackendSpec::Simulated(SimulatedSpec {
            latency: cfg.timing_model()?.latency_profile(mode),
            pacer: Arc::new(Pacer::new(time_scale, cfg.delay)),
        }),
        BackendKind::External => {
            return Err(CliError::Config(
                "backend `external` needs a BackendLoader supplied through the library API".into(),
            ))
        }
    };
    Ok(mc)
}

pub fn cmd_run(cfg: &Config, a: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let root = a.out.clone().unwrap_or_else(|| cfg.workspace.clone());
    let mut wf = WorkflowConfig::under_root(&root, a.mode);
    if let Some(input) = &a.input {
        wf.input_dir = input.clone();
    }
    wf.batch_size = a.batch_size.unwrap_or(cfg.batch_size);
    wf.retry_limit = cfg.retry_limit;
    wf.anonymization_salt = cfg.salt.clone();
    let mc = model_config(cfg, a.mode, a.time_scale.unwrap_or(cfg.time_scale))?;
    let report = run_workflow(&wf, &ModelRegistry::new(), &mc)?;
    writeln!(out, "mode       {}", a.mode)?;
    writeln!(out, "{report}")?;
    writeln!(out, "log        {}", report.log_path.display())?;
    if report.failed > 0 && !a.allow_failures {
        return Err(CliError::Failures {
            failed: report.failed,
        });
    }
    Ok(())
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn write_projections(
    out: &mut dyn Write,
    reports: &[bench::BenchReport],
    n: usize,
) -> Result<(), CliError> {
    writeln!(out, "\nProjection to {n} images (from the 2-decimal averages)")?;
    for r in reports {
        writeln!(out, "  {:<24}{}", r.mode.as_str(), project_cost(round2(r.avg_per_image_s), n))?;
    }
    let find = |m| reports.iter().find(|r| r.mode == m);
    if let (Some(slow), Some(fast)) = (find(ExecutionMode::RpaUipath), find(ExecutionMode::SingletonBatch)) {
        let cmp = EfficiencyComparison::new(
            &project_cost(round2(slow.avg_per_image_s), n),
            &project_cost(round2(fast.avg_per_image_s), n),
            CLAIMED_EFFICIENCY,
        );
        writeln!(out, "  uipath / v2: {cmp}")?;
    }
    Ok(())
}

pub fn cmd_bench(cfg: &Config, a: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.n == 0 {
        return Err(CliError::Usage("--n must be ≥ 1".into()));
    }
    let mut cfg = cfg.clone();
    if let Some(p) = a.preset {
        cfg.preset = p;
        cfg.timing = None;
    }
    let modes = ExecutionMode::parse_list(&a.mode)?;
    if modes.is_empty() {
        return Err(CliError::Usage("--mode selects no modes".into()));
    }
    let tm = cfg.timing_model()?;
    let dir = a.out.clone().unwrap_or_else(|| cfg.workspace.join("bench"));
    std::fs::create_dir_all(&dir)?;

    let simulated = simulate_reports(&modes, a.n, &tm, cfg.batch_size);
    writeln!(out, "Timing model: {}", cfg.timing_source())?;
    writeln!(out, "\nSimulated (closed form)")?;
    write!(out, "{}", render_summary(&simulated))?;
    write_report(&dir.join("report.tsv"), &simulated)?;

    if !a.simulate_only {
        let taxonomy = cfg.taxonomy()?;
        let counts = spread_counts(&taxonomy, a.n);
        let records = generate_synthetic_dataset(&taxonomy, &counts, cfg.seed)?;
        let mut mc = ModelConfig::reference(taxonomy);
        mc.normalization = cfg.normalization()?;
        let opts = MeasureOptions {
            time_scale: a.time_scale.unwrap_or(cfg.time_scale),
            strategy: cfg.delay,
            batch_size: cfg.batch_size,
            intra_batch_parallelism: false,
        };
        let mut measured = modes
            .iter()
            .map(|&m| measure_run(m, &records, &mc, &tm, &opts))
            .collect::<Result<Vec<_>, _>>()?;
        bench::attach_speedups(&mut measured);
        writeln!(out, "\nMeasured (time scale {}, unscaled)", opts.time_scale)?;
        write!(out, "{}", render_summary(&measured))?;
        write_report(&dir.join("measured.tsv"), &measured)?;
    }

    write_projections(out, &simulated, a.project_n)?;
    std::fs::write(dir.join("pareto.tsv"), pareto_table(&emit_pareto()))?;
    writeln!(out, "\nreports: {}", dir.display())?;
    Ok(())
}

/// `n` records spread over the classes as evenly as possible.
fn spread_counts(taxonomy: &crate::classifier::ClassTaxonomy, n: usize) -> BTreeMap<String, usize> {
    let k = taxonomy.len();
    taxonomy
        .subtypes()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), n / k + usize::from(i < n % k)))
        .collect()
}

pub fn cmd_project(cfg: &Config, a: &ProjectArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let avgs: Vec<f64> = match &a.avg {
        Some(s) => s
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| *x >= 0.0 && x.is_finite())
                    .ok_or_else(|| CliError::Usage(format!("--avg: `{v}` is not a non-negative number")))
            })
            .collect::<Result<_, _>>()?,
        None => {
            let tm = match a.preset {
                Some(p) => p.timing_model(),
                None => cfg.timing_model()?,
            };
            let r = simulate_reports(
                &[ExecutionMode::RpaUipath, ExecutionMode::SingletonBatch],
                bench::REFERENCE_IMAGES,
                &tm,
                cfg.batch_size,
            );
            r.iter().map(|r| round2(r.avg_per_image_s)).collect()
        }
    };
    let projections: Vec<_> = avgs.iter().map(|&v| project_cost(v, a.n)).collect();
    for p in &projections {
        writeln!(out, "{p}")?;
    }
    if let (Some(first), Some(last)) = (projections.first(), projections.last()) {
        if projections.len() > 1 {
            writeln!(out, "{}", EfficiencyComparison::new(first, last, CLAIMED_EFFICIENCY))?;
        }
    }
    Ok(())
}

pub fn cmd_pareto(a: &ParetoArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let table = pareto_table(&emit_pareto());
    write!(out, "{table}")?;
    if let Some(path) = &a.out {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, &table)?;
    }
    Ok(())
}

/// Convenience for callers that already have a config: run `prep` into `dir`.
pub fn prep_into(cfg: &Config, counts: &str, dir: &Path) -> Result<PathBuf, CliError> {
    let args = PrepArgs {
        counts: counts.to_string(),
        out: Some(dir.to_path_buf()),
    };
    cmd_prep(cfg, &args, &mut std::io::sink())
}
