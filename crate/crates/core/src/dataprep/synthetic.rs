//! Deterministic synthetic lesion-like images.
//!
//! Every class has a base hue taken from its major class and a blocky
//! ±1 texture of its own. Textures are distinct Walsh patterns on an 8×8
//! cell grid, so they are mutually orthogonal at the resolution the
//! reference classifier pools at. Generated samples add
//! seeded uniform pixel noise to the canonical rendering.

use std::collections::BTreeMap;

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mix_seed, stable_hash, DataprepError, ImageRecord, Origin};
use crate::classifier::ClassTaxonomy;

pub const DEFAULT_IMAGE_SIZE: u32 = 64;
pub const NOISE_AMPLITUDE: i32 = 12;

const MAJOR_HUES: [[f64; 3]; 4] = [
    [215.0, 95.0, 105.0],
    [95.0, 200.0, 90.0],
    [85.0, 105.0, 215.0],
    [205.0, 185.0, 70.0],
];

/// Walsh function `index` (1..=63) on the 8×8 cell grid: the low three bits
/// mask the cell row, the high three the cell column.
fn texture_sign(index: usize, cell_y: u32, cell_x: u32) -> f64 {
    let rm = (index & 7) as u32;
    let cm = (index >> 3 & 7) as u32;
    if ((cell_y & rm).count_ones() + (cell_x & cm).count_ones()) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn canonical_value(taxonomy: &ClassTaxonomy, class: usize, size: u32, x: u32, y: u32, c: usize) -> f64 {
    let hue = MAJOR_HUES[taxonomy.major_index(class) % MAJOR_HUES.len()];
    let sign = texture_sign(class % 63 + 1, y * 8 / size, x * 8 / size);
    hue[c] * (0.65 + 0.35 * sign)
}

/// Noise-free image for subtype index `class`.
pub fn render_canonical(taxonomy: &ClassTaxonomy, class: usize, size: u32) -> RgbImage {
    RgbImage::from_fn(size, size, |x, y| {
        let px: [u8; 3] =
            std::array::from_fn(|c| canonical_value(taxonomy, class, size, x, y, c).round() as u8);
        Rgb(px)
    })
}

fn render_noisy(taxonomy: &ClassTaxonomy, class: usize, size: u32, rng: &mut ChaCha8Rng) -> RgbImage {
    let mut img = render_canonical(taxonomy, class, size);
    for p in img.pixels_mut() {
        for v in p.0.iter_mut() {
            let n = rng.gen_range(-NOISE_AMPLITUDE..=NOISE_AMPLITUDE);
            *v = (*v as i32 + n).clamp(0, 255) as u8;
        }
    }
    img
}

/// Generate `counts[label]` noisy images per class, in taxonomy order.
pub fn generate_synthetic_dataset(
    taxonomy: &ClassTaxonomy,
    counts: &BTreeMap<String, usize>,
    seed: u64,
) -> Result<Vec<ImageRecord>, DataprepError> {
    generate_sized(taxonomy, counts, seed, DEFAULT_IMAGE_SIZE)
}

pub fn generate_sized(
    taxonomy: &ClassTaxonomy,
    counts: &BTreeMap<String, usize>,
    seed: u64,
    size: u32,
) -> Result<Vec<ImageRecord>, DataprepError> {
    if let Some(bad) = counts.keys().find(|k| taxonomy.index_of(k).is_none()) {
        return Err(DataprepError::UnknownClass(bad.clone()));
    }
    if size == 0 {
        return Err(DataprepError::InvalidParameter("image size must be ≥ 1".into()));
    }
    let mut out = Vec::new();
    for (class, label) in taxonomy.subtypes().iter().enumerate() {
        let n = counts.get(label).copied().unwrap_or(0);
        let class_seed = mix_seed(seed, stable_hash(label));
        for i in 0..n {
            let sample_seed = mix_seed(class_seed, i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
            let pixels = render_noisy(taxonomy, class, size, &mut rng);
            out.push(ImageRecord {
                id: format!("s{:016x}", mix_seed(sample_seed, 0x51)),
                label: label.clone(),
                major: taxonomy.parent(label).expect("label from taxonomy").to_string(),
                pixels,
                origin: Origin::Synthetic,
                source_id: None,
            });
        }
    }
    Ok(out)
}

/// `n` records for every class of `taxonomy`.
pub fn uniform_counts(taxonomy: &ClassTaxonomy, n: usize) -> BTreeMap<String, usize> {
    taxonomy.subtypes().iter().map(|s| (s.clone(), n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{predict_one, preprocess, ModelConfig, ModelRegistry};

    #[test]
    fn zero_counts_yield_nothing() {
        let tax = ClassTaxonomy::default();
        let out = generate_synthetic_dataset(&tax, &uniform_counts(&tax, 0), 7).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn reproducible_across_runs() {
        let tax = ClassTaxonomy::default();
        let counts = uniform_counts(&tax, 10);
        let a = generate_synthetic_dataset(&tax, &counts, 7).unwrap();
        let b = generate_synthetic_dataset(&tax, &counts, 7).unwrap();
        assert_eq!(a.len(), 160);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.pixels.as_raw(), y.pixels.as_raw());
        }
        let per_class = a.iter().filter(|r| r.label == "Benign-2").count();
        assert_eq!(per_class, 10);
        let c = generate_synthetic_dataset(&tax, &counts, 8).unwrap();
        assert_ne!(a[0].pixels.as_raw(), c[0].pixels.as_raw());
    }

    #[test]
    fn unknown_class_is_rejected() {
        let tax = ClassTaxonomy::default();
        let mut counts = BTreeMap::new();
        counts.insert("Nope".to_string(), 1);
        assert_eq!(
            generate_synthetic_dataset(&tax, &counts, 1).unwrap_err(),
            DataprepError::UnknownClass("Nope".into())
        );
    }

    #[test]
    fn noisy_samples_classify_as_their_class() {
        let tax = ClassTaxonomy::default();
        let reg = ModelRegistry::new();
        let model = reg.acquire(&ModelConfig::default()).unwrap();
        let recs = generate_synthetic_dataset(&tax, &uniform_counts(&tax, 3), 11).unwrap();
        for r in &recs {
            let t = preprocess((&r.pixels).into(), model.normalization()).unwrap();
            assert_eq!(predict_one(&model, &t).unwrap().predicted_label, r.label);
        }
    }
}
