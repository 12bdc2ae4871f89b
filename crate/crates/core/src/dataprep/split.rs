use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mix_seed, stable_hash, DataprepError, ImageRecord, Origin};
use crate::classifier::ClassTaxonomy;

/// Train / validation / test proportions.
pub const SPLIT_RATIOS: (f64, f64, f64) = (0.70, 0.15, 0.15);

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<ImageRecord>,
    pub validation: Vec<ImageRecord>,
    pub test: Vec<ImageRecord>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-class partition sizes: train = round(0.70·n), validation =
/// round(0.15·n), test = remainder. Rounds half up, in integers.
pub fn split_counts(n: usize) -> (usize, usize, usize) {
    let train = (70 * n + 50) / 100;
    let val = ((15 * n + 50) / 100).min(n - train);
    (train, val, n - train - val)
}

/// Shuffle each class with its own seeded stream, then cut it 70/15/15.
/// Classes are emitted in label order.
pub fn stratified_split(records: Vec<ImageRecord>, seed: u64) -> Result<DatasetSplit, DataprepError> {
    let mut by_class: BTreeMap<String, Vec<ImageRecord>> = BTreeMap::new();
    for r in records {
        by_class.entry(r.label.clone()).or_default().push(r);
    }
    if let Some((class, recs)) = by_class.iter().find(|(_, v)| v.len() < 3) {
        return Err(DataprepError::SplitTooSmall {
            class: class.clone(),
            count: recs.len(),
        });
    }
    let mut split = DatasetSplit {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
        seed,
    };
    for (label, mut recs) in by_class {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, stable_hash(&label)));
        recs.shuffle(&mut rng);
        let (train, val, _) = split_counts(recs.len());
        let mut rest = recs.split_off(train);
        let test = rest.split_off(val);
        split.train.extend(recs);
        split.validation.extend(rest);
        split.test.extend(test);
    }
    Ok(split)
}

#[derive(Debug, Clone)]
pub struct OversampleOutcome {
    /// Input records in input order, followed by the duplicates.
    pub records: Vec<ImageRecord>,
    /// Taxonomy classes absent from the input; they cannot be duplicated.
    pub empty_classes: Vec<String>,
}

/// Duplicate (with replacement) records of every class below `threshold`
/// until it has exactly `threshold`. Classes at or above are untouched.
pub fn oversample(
    train: Vec<ImageRecord>,
    taxonomy: &ClassTaxonomy,
    threshold: usize,
    seed: u64,
) -> Result<OversampleOutcome, DataprepError> {
    if threshold == 0 {
        return Err(DataprepError::InvalidParameter("oversample threshold must be ≥ 1".into()));
    }
    if let Some(r) = train.iter().find(|r| taxonomy.index_of(&r.label).is_none()) {
        return Err(DataprepError::UnknownClass(r.label.clone()));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); taxonomy.len()];
    for (i, r) in train.iter().enumerate() {
        members[taxonomy.index_of(&r.label).expect("checked")].push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut duplicates = Vec::new();
    let mut empty_classes = Vec::new();
    for (class, idx) in members.iter().enumerate() {
        if idx.is_empty() {
            let label = &taxonomy.subtypes()[class];
            log::warn!("class `{label}` has no training records; not oversampled");
            empty_classes.push(label.clone());
            continue;
        }
        for n in idx.len()..threshold {
            let src = &train[idx[rng.gen_range(0..idx.len())]];
            let id = format!("{}-d{:04}", src.id, n);
            duplicates.push(src.derived(id, Origin::Duplicated, src.pixels.clone()));
        }
    }
    let mut records = train;
    records.extend(duplicates);
    Ok(OversampleOutcome {
        records,
        empty_classes,
    })
}
