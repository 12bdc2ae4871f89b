//! Deterministic stand-in for the CNN.
//!
//! Features are an 8×8 grid of per-channel means over the tensor (192 values,
//! ordered cell-row, cell-column, channel). Scores are a bias-free linear map
//! of the features followed by a softmax.
//!
//! The weight matrix is built from the synthetic generator's canonical class
//! images: with `F` the 192×K matrix of canonical features, the rows are
//! `GAIN · (FᵀF)⁻¹ Fᵀ`, so canonical class `k` scores exactly `GAIN` on class
//! `k` and zero elsewhere. A small uniform perturbation drawn from
//! `ChaCha8Rng::seed_from_u64(REFERENCE_WEIGHT_SEED)` is added on top.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tensor::{preprocess, Normalization, Tensor, INPUT_CHANNELS, INPUT_HEIGHT, INPUT_WIDTH};
use super::taxonomy::ClassTaxonomy;
use super::ClassifierError;
use crate::dataprep::synthetic;

pub const GRID: usize = 8;
pub const FEATURE_LEN: usize = GRID * GRID * INPUT_CHANNELS;
pub const REFERENCE_WEIGHT_SEED: u64 = 0x0C_5EED_2024;
const GAIN: f64 = 8.0;
const JITTER: f64 = 1e-3;

/// 8×8 per-channel mean pooling. Each cell averages a 28×28 block.
pub fn pooled_features(t: &Tensor) -> [f64; FEATURE_LEN] {
    let cell_h = INPUT_HEIGHT / GRID;
    let cell_w = INPUT_WIDTH / GRID;
    let row_len = INPUT_WIDTH * INPUT_CHANNELS;
    let n = (cell_h * cell_w) as f64;
    let mut out = [0f64; FEATURE_LEN];
    let mut band = vec![0f32; row_len];
    for (gy, rows) in t.as_slice().chunks_exact(row_len * cell_h).enumerate() {
        band.fill(0.0);
        for row in rows.chunks_exact(row_len) {
            for (b, v) in band.iter_mut().zip(row) {
                *b += v;
            }
        }
        for (gx, cell) in band.chunks_exact(cell_w * INPUT_CHANNELS).enumerate() {
            let mut acc = [0f64; INPUT_CHANNELS];
            for px in cell.chunks_exact(INPUT_CHANNELS) {
                for (a, v) in acc.iter_mut().zip(px) {
                    *a += *v as f64;
                }
            }
            for (c, a) in acc.iter().enumerate() {
                out[(gy * GRID + gx) * INPUT_CHANNELS + c] = a / n;
            }
        }
    }
    out
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Fixed linear map from pooled features to class scores.
#[derive(Debug, Clone)]
pub struct ReferenceWeights {
    rows: Vec<[f64; FEATURE_LEN]>,
}

impl ReferenceWeights {
    pub fn build(taxonomy: &ClassTaxonomy, norm: &Normalization) -> Result<Self, ClassifierError> {
        let k = taxonomy.len();
        let mut columns = Vec::with_capacity(k * FEATURE_LEN);
        for class in 0..k {
            let img = synthetic::render_canonical(taxonomy, class, synthetic::DEFAULT_IMAGE_SIZE);
            let t = preprocess((&img).into(), norm)?;
            columns.extend_from_slice(&pooled_features(&t));
        }
        let f = DMatrix::from_column_slice(FEATURE_LEN, k, &columns);
        let gram = f.transpose() * &f;
        let inv = gram.try_inverse().ok_or_else(|| {
            ClassifierError::LoadFailure(
                "canonical class features are linearly dependent".to_string(),
            )
        })?;
        let map = inv * f.transpose() * GAIN;

        let mut rng = ChaCha8Rng::seed_from_u64(REFERENCE_WEIGHT_SEED);
        let rows = (0..k)
            .map(|r| {
                let scale = map.row(r).norm() * JITTER / (FEATURE_LEN as f64).sqrt();
                let mut row = [0f64; FEATURE_LEN];
                for (j, w) in row.iter_mut().enumerate() {
                    *w = map[(r, j)] + scale * rng.gen_range(-1.0..1.0);
                }
                row
            })
            .collect();
        Ok(Self { rows })
    }

    /// Memoized [`build`](Self::build), keyed by taxonomy and normalization.
    pub fn shared(taxonomy: &ClassTaxonomy, norm: &Normalization) -> Result<Arc<Self>, ClassifierError> {
        static CACHE: OnceLock<Mutex<HashMap<String, Arc<ReferenceWeights>>>> = OnceLock::new();
        let key = format!("{:?}|{:?}|{:?}|{:?}", taxonomy.majors(), taxonomy.subtype_defs(), norm.mean, norm.std);
        let cache = CACHE.get_or_init(Default::default);
        if let Some(w) = cache.lock().unwrap().get(&key) {
            return Ok(w.clone());
        }
        let w = Arc::new(Self::build(taxonomy, norm)?);
        cache.lock().unwrap().insert(key, w.clone());
        Ok(w)
    }

    pub fn classes(&self) -> usize {
        self.rows.len()
    }

    pub fn scores(&self, t: &Tensor) -> Vec<f64> {
        let feats = pooled_features(t);
        self.rows
            .iter()
            .map(|row| row.iter().zip(&feats).map(|(w, f)| w * f).sum())
            .collect()
    }

    /// Class probabilities for one tensor. Pure function of the tensor.
    pub fn probabilities(&self, t: &Tensor) -> Vec<f64> {
        softmax(&self.scores(t))
    }
}

/// One-shot convenience: build the default-normalization weights for
/// `taxonomy` and score `t`.
pub fn reference_scores(taxonomy: &ClassTaxonomy, t: &Tensor) -> Result<Vec<f64>, ClassifierError> {
    Ok(ReferenceWeights::build(taxonomy, &Normalization::default())?.probabilities(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_tensor_is_uniform() {
        let tax = ClassTaxonomy::default();
        let p = reference_scores(&tax, &Tensor::zeros()).unwrap();
        assert_eq!(p.len(), 16);
        for v in p {
            assert!((v - 1.0 / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_normalizes_large_inputs() {
        let p = softmax(&[1000.0, 999.0, -1000.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn scaled_input_still_normalized() {
        let tax = ClassTaxonomy::default();
        let w = ReferenceWeights::build(&tax, &Normalization::default()).unwrap();
        let img = synthetic::render_canonical(&tax, 5, 64);
        let t = preprocess((&img).into(), &Normalization::default()).unwrap();
        for alpha in [0.1f32, 3.0, 40.0] {
            let scaled =
                Tensor::from_vec(t.as_slice().iter().map(|v| v * alpha).collect()).unwrap();
            let p = w.probabilities(&scaled);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn canonical_images_win_their_class() {
        let tax = ClassTaxonomy::default();
        let norm = Normalization::default();
        let w = ReferenceWeights::build(&tax, &norm).unwrap();
        for class in 0..tax.len() {
            let img = synthetic::render_canonical(&tax, class, synthetic::DEFAULT_IMAGE_SIZE);
            let t = preprocess((&img).into(), &norm).unwrap();
            let s = w.scores(&t);
            let best = (0..s.len()).max_by(|&a, &b| s[a].total_cmp(&s[b]).then(b.cmp(&a))).unwrap();
            assert_eq!(best, class, "scores {s:?}");
        }
    }

    #[test]
    fn weights_are_reproducible() {
        let tax = ClassTaxonomy::default();
        let a = ReferenceWeights::build(&tax, &Normalization::default()).unwrap();
        let b = ReferenceWeights::build(&tax, &Normalization::default()).unwrap();
        assert_eq!(a.rows, b.rows);
    }
}
