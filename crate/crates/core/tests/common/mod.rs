#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use lesionbatch::classifier::{
    Backend, BackendKind, BackendLoader, BackendSpec, ClassTaxonomy, Invocation, ModelConfig,
    ReferenceWeights, Normalization, Tensor,
};
use lesionbatch::dataprep::{generate_synthetic_dataset, uniform_counts, ImageRecord};

/// `n` synthetic records spread round-robin over the default classes.
pub fn records(n: usize, seed: u64) -> Vec<ImageRecord> {
    let tax = ClassTaxonomy::default();
    let per = n.div_ceil(tax.len());
    let mut all = generate_synthetic_dataset(&tax, &uniform_counts(&tax, per), seed).unwrap();
    let k = tax.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        out.push(all[(i % k) * per + i / k].clone());
    }
    all.clear();
    out
}

/// Write `records` as `img_NNNN.png` and return their paths.
pub fn write_images(dir: &Path, records: &[ImageRecord]) -> Vec<PathBuf> {
    fs::create_dir_all(dir).unwrap();
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let p = dir.join(format!("img_{i:04}.png"));
            r.pixels.save(&p).unwrap();
            p
        })
        .collect()
}

pub fn write_corrupt(dir: &Path, name: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, b"\x89PNG\r\n\x1a\nnot really a png").unwrap();
    p
}

pub fn file_names(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = match fs::read_dir(dir) {
        Ok(rd) => rd
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect(),
        Err(_) => Vec::new(),
    };
    v.sort();
    v
}

/// Reference backend that fails the first `fail_calls` predict calls.
pub struct Flaky {
    weights: Arc<ReferenceWeights>,
    remaining: AtomicUsize,
    pub calls: Arc<AtomicUsize>,
}

impl Backend for Flaky {
    fn kind(&self) -> BackendKind {
        BackendKind::External
    }

    fn predict(&self, batch: &[Tensor], _: Invocation) -> Result<Vec<Vec<f64>>, String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if self
            .remaining
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |r| r.checked_sub(1))
            .is_ok()
        {
            return Err("transient device error".into());
        }
        Ok(batch.iter().map(|t| self.weights.probabilities(t)).collect())
    }
}

pub struct FlakyLoader {
    pub fail_calls: usize,
    pub calls: Arc<AtomicUsize>,
}

impl BackendLoader for FlakyLoader {
    fn load(&self, taxonomy: &ClassTaxonomy) -> Result<Box<dyn Backend>, String> {
        let weights = ReferenceWeights::shared(taxonomy, &Normalization::default()).map_err(|e| e.to_string())?;
        Ok(Box::new(Flaky {
            weights,
            remaining: AtomicUsize::new(self.fail_calls),
            calls: self.calls.clone(),
        }))
    }
}

pub fn flaky_config(fail_calls: usize) -> (ModelConfig, Arc<AtomicUsize>) {
    let calls = Arc::new(AtomicUsize::new(0));
    let loader = FlakyLoader {
        fail_calls,
        calls: calls.clone(),
    };
    let cfg = ModelConfig::reference(ClassTaxonomy::default())
        .with_backend(BackendSpec::External(Arc::new(loader)));
    (cfg, calls)
}

/// Records with 1x1 pixels, `counts[label]` per class.
pub fn tiny_records(tax: &ClassTaxonomy, counts: &std::collections::BTreeMap<String, usize>) -> Vec<ImageRecord> {
    let mut out = Vec::new();
    for (label, &n) in counts {
        for i in 0..n {
            out.push(ImageRecord {
                id: format!("{label}-{i:04}"),
                label: label.clone(),
                major: tax.parent(label).unwrap().to_string(),
                pixels: image::RgbImage::new(1, 1),
                origin: lesionbatch::dataprep::Origin::Synthetic,
                source_id: None,
            });
        }
    }
    out
}
