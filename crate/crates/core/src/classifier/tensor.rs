//! Image → model-input conversion.
//!
//! Resampling is bilinear with corner-aligned sampling: output pixel `o`
//! along an axis of `n_out` samples reads source coordinate
//! `o * (n_in - 1) / (n_out - 1)`, so the first and last output pixels sit
//! exactly on the first and last source pixels. Equal sizes are an exact
//! identity. The horizontal pass runs in `f64`, the vertical pass in `f32`.

use std::sync::Mutex;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::{ClassifierError, DEFAULT_BATCH_SIZE};

pub const INPUT_HEIGHT: usize = 224;
pub const INPUT_WIDTH: usize = 224;
pub const INPUT_CHANNELS: usize = 3;
pub const INPUT_LEN: usize = INPUT_HEIGHT * INPUT_WIDTH * INPUT_CHANNELS;

/// Per-channel standardization constants applied after scaling to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalization {
    pub mean: [f32; 3],
    pub std: [f32; 3],
}

impl Default for Normalization {
    /// ImageNet RGB statistics.
    fn default() -> Self {
        Self {
            mean: [0.485, 0.456, 0.406],
            std: [0.229, 0.224, 0.225],
        }
    }
}

impl Normalization {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.std.iter().any(|s| !(*s > 0.0) || !s.is_finite())
            || self.mean.iter().any(|m| !m.is_finite())
        {
            return Err(ClassifierError::InvalidConfig(format!(
                "normalization std must be positive and finite: {:?}",
                self
            )));
        }
        Ok(())
    }
}

/// Borrowed interleaved 8-bit image.
#[derive(Debug, Clone, Copy)]
pub struct ImageView<'a> {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: &'a [u8],
}

impl<'a> From<&'a RgbImage> for ImageView<'a> {
    fn from(img: &'a RgbImage) -> Self {
        Self {
            width: img.width() as usize,
            height: img.height() as usize,
            channels: 3,
            data: img.as_raw(),
        }
    }
}

/// Released tensor buffers kept for reuse.
static BUFFER_POOL: Mutex<Vec<Vec<f32>>> = Mutex::new(Vec::new());
/// Upper bound on pooled buffers (about 38 MB).
pub const TENSOR_POOL_LIMIT: usize = 2 * DEFAULT_BATCH_SIZE;

/// A buffer of `INPUT_LEN` values with unspecified contents.
fn take_buffer() -> Vec<f32> {
    BUFFER_POOL.lock().unwrap().pop().unwrap_or_else(|| {
        let mut v = Vec::with_capacity(INPUT_LEN);
        v.resize(INPUT_LEN, 0.0);
        v
    })
}

/// Allocate and release `n` tensors so that the next `n` preprocess calls
/// reuse already-resident memory. Returns the number of pooled buffers.
pub fn prewarm_tensor_buffers(n: usize) -> usize {
    let held: Vec<Tensor> = (0..n.min(TENSOR_POOL_LIMIT)).map(|_| Tensor::zeros()).collect();
    drop(held);
    BUFFER_POOL.lock().unwrap().len()
}

/// A 224×224×3 model input, row-major HWC. Buffers return to a small
/// process-wide pool on drop.
#[derive(Debug, PartialEq)]
pub struct Tensor {
    data: Vec<f32>,
}

impl Clone for Tensor {
    fn clone(&self) -> Self {
        let mut data = take_buffer();
        data.copy_from_slice(&self.data);
        Self { data }
    }
}

impl Drop for Tensor {
    fn drop(&mut self) {
        let data = std::mem::take(&mut self.data);
        if data.len() == INPUT_LEN {
            let mut pool = BUFFER_POOL.lock().unwrap();
            if pool.len() < TENSOR_POOL_LIMIT {
                pool.push(data);
            }
        }
    }
}

impl Tensor {
    pub fn zeros() -> Self {
        let mut data = take_buffer();
        data.fill(0.0);
        Self { data }
    }

    pub fn from_vec(data: Vec<f32>) -> Result<Self, ClassifierError> {
        if data.len() != INPUT_LEN {
            return Err(ClassifierError::MalformedImage(format!(
                "tensor must hold {INPUT_LEN} values, got {}",
                data.len()
            )));
        }
        Ok(Self { data })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (INPUT_HEIGHT, INPUT_WIDTH, INPUT_CHANNELS)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * INPUT_WIDTH + x) * INPUT_CHANNELS + c]
    }
}

fn axis_samples(n_in: usize, n_out: usize) -> Vec<(usize, usize, f64)> {
    (0..n_out)
        .map(|o| {
            let pos = if n_out > 1 && n_in > 1 {
                o as f64 * (n_in - 1) as f64 / (n_out - 1) as f64
            } else {
                0.0
            };
            let lo = (pos.floor() as usize).min(n_in - 1);
            let hi = (lo + 1).min(n_in - 1);
            (lo, hi, pos - lo as f64)
        })
        .collect()
}

/// Separable bilinear resize of an interleaved RGB buffer. `map` is applied
/// to every horizontally interpolated sample, before the vertical pass; it
/// must be affine per channel for the result to equal map-after-resize.
fn resize_mapped(
    src: &[u8],
    width: usize,
    height: usize,
    out_width: usize,
    out_height: usize,
    map: impl Fn(f64, usize) -> f32,
    mut out: Vec<f32>,
) -> Vec<f32> {
    let xs = axis_samples(width, out_width);
    let ys = axis_samples(height, out_height);
    let rows: Vec<Vec<f32>> = (0..height)
        .map(|y| {
            let src_row = &src[y * width * 3..(y + 1) * width * 3];
            let mut row = vec![0f32; out_width * 3];
            for (o, &(x0, x1, fx)) in row.chunks_exact_mut(3).zip(&xs) {
                let a = &src_row[x0 * 3..x0 * 3 + 3];
                let b = &src_row[x1 * 3..x1 * 3 + 3];
                for c in 0..3 {
                    o[c] = map(a[c] as f64 * (1.0 - fx) + b[c] as f64 * fx, c);
                }
            }
            row
        })
        .collect();
    out.resize(out_width * out_height * 3, 0.0);
    for (out_row, &(y0, y1, fy)) in out.chunks_exact_mut(out_width * 3).zip(&ys) {
        let (wt, wb) = ((1.0 - fy) as f32, fy as f32);
        if wb == 0.0 {
            out_row.copy_from_slice(&rows[y0]);
            continue;
        }
        let (top, bottom) = (&rows[y0][..out_row.len()], &rows[y1][..out_row.len()]);
        for i in 0..out_row.len() {
            out_row[i] = top[i] * wt + bottom[i] * wb;
        }
    }
    out
}

/// Bilinear resize of an interleaved RGB buffer; output values stay in the
/// source intensity scale (0..=255) as `f32`.
pub fn resize_bilinear(
    src: &[u8],
    width: usize,
    height: usize,
    out_width: usize,
    out_height: usize,
) -> Vec<f32> {
    resize_mapped(src, width, height, out_width, out_height, |v, _| v as f32, Vec::new())
}

/// Resize to 224×224, scale to `[0, 1]`, then standardize per channel.
pub fn preprocess(raw: ImageView<'_>, norm: &Normalization) -> Result<Tensor, ClassifierError> {
    if raw.channels != 3 {
        return Err(ClassifierError::MalformedImage(format!(
            "expected 3 channels, got {}",
            raw.channels
        )));
    }
    if raw.width == 0 || raw.height == 0 {
        return Err(ClassifierError::MalformedImage(format!(
            "zero-sized image {}x{}",
            raw.width, raw.height
        )));
    }
    if raw.data.len() != raw.width * raw.height * 3 {
        return Err(ClassifierError::MalformedImage(format!(
            "buffer holds {} bytes, {}x{}x3 needs {}",
            raw.data.len(),
            raw.width,
            raw.height,
            raw.width * raw.height * 3
        )));
    }
    let scale: [f64; 3] = std::array::from_fn(|c| 1.0 / (255.0 * norm.std[c] as f64));
    let offset: [f64; 3] = std::array::from_fn(|c| -(norm.mean[c] as f64) / norm.std[c] as f64);
    let data = resize_mapped(
        raw.data,
        raw.width,
        raw.height,
        INPUT_WIDTH,
        INPUT_HEIGHT,
        |v, c| (v * scale[c] + offset[c]) as f32,
        take_buffer(),
    );
    Ok(Tensor { data })
}

/// [`preprocess`] with the default normalization constants.
pub fn preprocess_rgb(img: &RgbImage) -> Result<Tensor, ClassifierError> {
    preprocess(img.into(), &Normalization::default())
}
