//! Classification backends behind a load-once registry.

mod reference;
mod registry;
mod simulated;
mod taxonomy;
mod tensor;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use reference::{
    pooled_features, reference_scores, softmax, ReferenceWeights, FEATURE_LEN, GRID,
    REFERENCE_WEIGHT_SEED,
};
pub use registry::{acquire_model, reset_registry, ModelHandle, ModelRegistry};
pub use simulated::{DelayStrategy, Pacer, SimulatedBackend, SimulatedLatency, SimulatedSpec};
pub use taxonomy::{ClassTaxonomy, SubtypeDef, DEFAULT_MAJORS, DEFAULT_SUBTYPES_PER_MAJOR};
pub use tensor::{
    prewarm_tensor_buffers, preprocess, preprocess_rgb, resize_bilinear, ImageView, Normalization,
    Tensor, INPUT_CHANNELS, INPUT_HEIGHT, INPUT_LEN, INPUT_WIDTH, TENSOR_POOL_LIMIT,
};

/// Inference batch size used when none is configured.
pub const DEFAULT_BATCH_SIZE: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifierError {
    #[error("unknown backend `{0}` (expected reference, simulated or external)")]
    UnknownBackend(String),
    #[error("model load failed: {0}")]
    LoadFailure(String),
    #[error("malformed image: {0}")]
    MalformedImage(String),
    #[error("backend failure on inputs {}..{}: {message}", range.start, range.end)]
    BackendFailure { range: Range<usize>, message: String },
    #[error("invalid taxonomy: {0}")]
    InvalidTaxonomy(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl ClassifierError {
    /// Short stable name used in logs.
    pub fn class_name(&self) -> &'static str {
        match self {
            Self::UnknownBackend(_) => "UnknownBackend",
            Self::LoadFailure(_) => "LoadFailure",
            Self::MalformedImage(_) => "MalformedImage",
            Self::BackendFailure { .. } => "BackendFailure",
            Self::InvalidTaxonomy(_) => "InvalidTaxonomy",
            Self::InvalidConfig(_) => "InvalidConfig",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Reference,
    Simulated,
    External,
}

impl FromStr for BackendKind {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reference" => Ok(Self::Reference),
            "simulated" => Ok(Self::Simulated),
            "external" => Ok(Self::External),
            other => Err(ClassifierError::UnknownBackend(other.to_string())),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Reference => "reference",
            Self::Simulated => "simulated",
            Self::External => "external",
        })
    }
}

/// Shape of one call into a backend. Only latency emulation tells them apart;
/// the returned probabilities never depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invocation {
    /// One image per call.
    Single,
    /// A chunk of images in one call.
    Batch,
    /// One image driven through an automation-platform activity.
    Activity,
}

/// A loaded classifier. Implementations must be pure with respect to the
/// returned probabilities: one vector per input tensor, in input order.
pub trait Backend: Send + Sync {
    fn kind(&self) -> BackendKind;

    fn predict(&self, batch: &[Tensor], invocation: Invocation) -> Result<Vec<Vec<f64>>, String>;
}

/// Adapter contract for externally provided models (for example real CNN
/// weights behind an inference runtime). `load` is called at most once per
/// registry lifetime; a returned error leaves the registry empty.
pub trait BackendLoader: Send + Sync {
    fn load(&self, taxonomy: &ClassTaxonomy) -> Result<Box<dyn Backend>, String>;
}

#[derive(Clone)]
pub enum BackendSpec {
    Reference,
    Simulated(SimulatedSpec),
    External(Arc<dyn BackendLoader>),
}

impl BackendSpec {
    pub fn kind(&self) -> BackendKind {
        match self {
            Self::Reference => BackendKind::Reference,
            Self::Simulated(_) => BackendKind::Simulated,
            Self::External(_) => BackendKind::External,
        }
    }
}

impl fmt::Debug for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Reference => f.write_str("Reference"),
            Self::Simulated(s) => f.debug_tuple("Simulated").field(&s.latency).finish(),
            Self::External(_) => f.write_str("External(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub backend: BackendSpec,
    pub taxonomy: ClassTaxonomy,
    pub normalization: Normalization,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::reference(ClassTaxonomy::default())
    }
}

impl ModelConfig {
    pub fn reference(taxonomy: ClassTaxonomy) -> Self {
        Self {
            backend: BackendSpec::Reference,
            taxonomy,
            normalization: Normalization::default(),
        }
    }

    pub fn with_backend(mut self, backend: BackendSpec) -> Self {
        self.backend = backend;
        self
    }
}

struct ReferenceBackend {
    weights: ReferenceWeights,
}

impl Backend for ReferenceBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Reference
    }

    fn predict(&self, batch: &[Tensor], _: Invocation) -> Result<Vec<Vec<f64>>, String> {
        Ok(batch.iter().map(|t| self.weights.probabilities(t)).collect())
    }
}

pub(crate) fn load_backend(cfg: &ModelConfig) -> Result<Box<dyn Backend>, ClassifierError> {
    cfg.normalization.validate()?;
    match &cfg.backend {
        BackendSpec::Reference => Ok(Box::new(ReferenceBackend {
            weights: ReferenceWeights::build(&cfg.taxonomy, &cfg.normalization)?,
        })),
        BackendSpec::Simulated(spec) => {
            let weights = ReferenceWeights::shared(&cfg.taxonomy, &cfg.normalization)?;
            Ok(Box::new(SimulatedBackend::load(spec, weights)?))
        }
        BackendSpec::External(loader) => loader
            .load(&cfg.taxonomy)
            .map_err(ClassifierError::LoadFailure),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionResult {
    /// Pseudonymous image token, set by the workflow layer.
    pub image_id: Option<String>,
    pub probabilities: Vec<f64>,
    pub class_index: usize,
    pub predicted_label: String,
    pub elapsed_s: f64,
}

impl PredictionResult {
    pub fn confidence(&self) -> f64 {
        self.probabilities[self.class_index]
    }

    /// Equality of everything except timing and id.
    pub fn same_values(&self, other: &Self) -> bool {
        self.class_index == other.class_index
            && self.predicted_label == other.predicted_label
            && self.probabilities.len() == other.probabilities.len()
            && self
                .probabilities
                .iter()
                .zip(&other.probabilities)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn check_probabilities(p: &[f64], classes: usize) -> Result<(), String> {
    if p.len() != classes {
        return Err(format!("expected {classes} probabilities, got {}", p.len()));
    }
    if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err("probability outside [0, 1]".into());
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(format!("probabilities sum to {sum}"));
    }
    Ok(())
}

/// Run one backend call over `tensors` (indices `offset..`) and wrap results.
pub fn predict_invocation(
    model: &ModelHandle,
    tensors: &[Tensor],
    invocation: Invocation,
    offset: usize,
) -> Result<Vec<PredictionResult>, ClassifierError> {
    let range = offset..offset + tensors.len();
    let fail = |message: String| ClassifierError::BackendFailure {
        range: range.clone(),
        message,
    };
    let started = Instant::now();
    let probs = model.backend().predict(tensors, invocation).map_err(fail)?;
    let elapsed = started.elapsed().as_secs_f64();
    if probs.len() != tensors.len() {
        return Err(fail(format!(
            "backend returned {} results for {} inputs",
            probs.len(),
            tensors.len()
        )));
    }
    let labels = model.class_labels();
    let share = if tensors.is_empty() {
        0.0
    } else {
        elapsed / tensors.len() as f64
    };
    probs
        .into_iter()
        .map(|p| {
            check_probabilities(&p, labels.len()).map_err(fail)?;
            let class_index = argmax(&p);
            Ok(PredictionResult {
                image_id: None,
                predicted_label: labels[class_index].clone(),
                class_index,
                probabilities: p,
                elapsed_s: share,
            })
        })
        .collect()
}

pub fn predict_one(model: &ModelHandle, t: &Tensor) -> Result<PredictionResult, ClassifierError> {
    let mut out = predict_invocation(model, std::slice::from_ref(t), Invocation::Single, 0)?;
    Ok(out.pop().expect("one result per input"))
}

/// Predict in consecutive chunks of at most `batch_size`, preserving order.
pub fn predict_batch(
    model: &ModelHandle,
    tensors: &[Tensor],
    batch_size: usize,
) -> Result<Vec<PredictionResult>, ClassifierError> {
    if batch_size == 0 {
        return Err(ClassifierError::InvalidConfig("batch_size must be ≥ 1".into()));
    }
    let mut out = Vec::with_capacity(tensors.len());
    for (i, chunk) in tensors.chunks(batch_size).enumerate() {
        out.extend(predict_invocation(
            model,
            chunk,
            Invocation::Batch,
            i * batch_size,
        )?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng) -> Tensor {
        Tensor::from_vec((0..INPUT_LEN).map(|_| rng.gen_range(-3.0f32..3.0)).collect()).unwrap()
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.25, 0.25, 0.25, 0.25]), 0);
        assert_eq!(argmax(&[0.1, 0.45, 0.45]), 1);
        assert_eq!(argmax(&[0.1, 0.2, 0.7]), 2);
    }

    #[test]
    fn backend_kind_parsing() {
        assert_eq!("simulated".parse::<BackendKind>().unwrap(), BackendKind::Simulated);
        assert_eq!(
            "onnx".parse::<BackendKind>(),
            Err(ClassifierError::UnknownBackend("onnx".into()))
        );
    }

    #[test]
    fn predictions_are_normalized_and_deterministic() {
        let reg = ModelRegistry::new();
        let model = reg.acquire(&ModelConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_tensor(&mut rng);
        let a = predict_one(&model, &t).unwrap();
        let b = predict_one(&model, &t).unwrap();
        assert!((a.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert!(a.same_values(&b));
        assert_eq!(a.predicted_label, model.class_labels()[argmax(&a.probabilities)]);
        assert!(a.elapsed_s >= 0.0);
    }

    #[test]
    fn empty_and_short_batches() {
        let reg = ModelRegistry::new();
        let model = reg.acquire(&ModelConfig::default()).unwrap();
        assert!(predict_batch(&model, &[], 32).unwrap().is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ts: Vec<_> = (0..31).map(|_| random_tensor(&mut rng)).collect();
        let out = predict_batch(&model, &ts, DEFAULT_BATCH_SIZE).unwrap();
        assert_eq!(out.len(), 31);
        for (r, t) in out.iter().zip(&ts) {
            assert!(r.same_values(&predict_one(&model, t).unwrap()));
        }
        assert!(predict_batch(&model, &ts, 0).is_err());
    }

    struct FailSecondChunk;

    impl Backend for FailSecondChunk {
        fn kind(&self) -> BackendKind {
            BackendKind::External
        }

        fn predict(&self, batch: &[Tensor], _: Invocation) -> Result<Vec<Vec<f64>>, String> {
            if batch[0].as_slice()[0] > 0.0 {
                return Err("boom".into());
            }
            Ok(batch.iter().map(|_| vec![1.0 / 16.0; 16]).collect())
        }
    }

    struct Loader;

    impl BackendLoader for Loader {
        fn load(&self, _: &ClassTaxonomy) -> Result<Box<dyn Backend>, String> {
            Ok(Box::new(FailSecondChunk))
        }
    }

    #[test]
    fn batch_failure_reports_chunk_range() {
        let cfg = ModelConfig::default().with_backend(BackendSpec::External(Arc::new(Loader)));
        let reg = ModelRegistry::new();
        let model = reg.acquire(&cfg).unwrap();
        let mut hot = vec![0f32; INPUT_LEN];
        hot[0] = 1.0;
        let ts = vec![
            Tensor::zeros(),
            Tensor::zeros(),
            Tensor::from_vec(hot).unwrap(),
            Tensor::zeros(),
        ];
        let err = predict_batch(&model, &ts, 2).unwrap_err();
        assert!(matches!(err, ClassifierError::BackendFailure { range, .. } if range == (2..4)));
    }
}
