//! Synthetic data and the training-set preparation pipeline:
//! stratified split, minority oversampling, per-sample augmentation.

pub mod augment;
pub mod manifest;
mod split;
pub mod synthetic;

use std::fmt;

use image::RgbImage;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::classifier::ClassTaxonomy;

pub use augment::{augment_sample, Transform, AUGMENTATIONS_PER_SAMPLE};
pub use manifest::{read_manifest, write_dataset, ManifestEntry};
pub use split::{oversample, split_counts, stratified_split, DatasetSplit, OversampleOutcome, SPLIT_RATIOS};
pub use synthetic::{generate_synthetic_dataset, render_canonical, uniform_counts};

/// Classes below this many training records get duplicated up to it.
pub const OVERSAMPLE_THRESHOLD: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DataprepError {
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("class `{class}` has {count} records; a stratified split needs at least 3")]
    SplitTooSmall { class: String, count: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for DataprepError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Synthetic,
    Duplicated,
    Augmented,
    Ingested,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Synthetic => "synthetic",
            Self::Duplicated => "duplicated",
            Self::Augmented => "augmented",
            Self::Ingested => "ingested",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "synthetic" => Self::Synthetic,
            "duplicated" => Self::Duplicated,
            "augmented" => Self::Augmented,
            "ingested" => Self::Ingested,
            _ => return None,
        })
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A labeled 8-bit RGB image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub id: String,
    /// Subtype label.
    pub label: String,
    pub major: String,
    pub pixels: RgbImage,
    pub origin: Origin,
    /// Set for duplicated and augmented records.
    pub source_id: Option<String>,
}

impl ImageRecord {
    pub fn derived(&self, id: String, origin: Origin, pixels: RgbImage) -> Self {
        Self {
            id,
            label: self.label.clone(),
            major: self.major.clone(),
            pixels,
            origin,
            source_id: Some(self.id.clone()),
        }
    }
}

/// Splitmix64 finalizer over `seed ^ stream`.
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Platform-independent 64-bit hash of a label.
pub(crate) fn stable_hash(s: &str) -> u64 {
    let digest = Sha256::digest(s.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone)]
pub struct TrainingSet {
    /// Originals, then duplicates, then augmentations.
    pub records: Vec<ImageRecord>,
    /// Taxonomy classes with no training record; skipped by oversampling.
    pub empty_classes: Vec<String>,
}

/// Oversample the training portion of `split`, then add
/// [`AUGMENTATIONS_PER_SAMPLE`] variants of every resulting record.
/// Validation and test portions are not read.
pub fn build_training_set(
    split: &DatasetSplit,
    taxonomy: &ClassTaxonomy,
    threshold: usize,
    seed: u64,
) -> Result<TrainingSet, DataprepError> {
    if split.train.is_empty() {
        return Ok(TrainingSet {
            records: Vec::new(),
            empty_classes: Vec::new(),
        });
    }
    let OversampleOutcome {
        records: mut base,
        empty_classes,
    } = oversample(split.train.clone(), taxonomy, threshold, mix_seed(seed, 1))?;
    let aug_seed = mix_seed(seed, 2);
    let mut augmented = Vec::with_capacity(base.len() * AUGMENTATIONS_PER_SAMPLE);
    for (i, rec) in base.iter().enumerate() {
        augmented.extend(augment_sample(rec, mix_seed(aug_seed, i as u64)));
    }
    base.extend(augmented);
    Ok(TrainingSet {
        records: base,
        empty_classes,
    })
}
