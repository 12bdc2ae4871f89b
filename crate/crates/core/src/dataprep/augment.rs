//! Single-transform augmentation variants.

use image::{imageops, Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mix_seed, ImageRecord, Origin};
use crate::classifier::resize_bilinear;

pub const AUGMENTATIONS_PER_SAMPLE: usize = 5;
pub const MAX_ROTATION_DEG: f64 = 25.0;
pub const JITTER: f64 = 0.20;
pub const MIN_CROP_AREA: f64 = 0.80;

/// Brightness step used when a drawn transform leaves the image unchanged.
const FALLBACK_OFFSET: f64 = 26.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    HorizontalFlip,
    VerticalFlip,
    /// Counter-clockwise degrees about the image center.
    Rotate(f64),
    /// `out = (p - 127.5) · contrast + 127.5 + brightness`
    BrightnessContrast { brightness: f64, contrast: f64 },
    /// Crop rectangle, resized back to the source size.
    Crop { x: u32, y: u32, width: u32, height: u32 },
}

impl Transform {
    pub fn name(&self) -> &'static str {
        match self {
            Self::HorizontalFlip => "hflip",
            Self::VerticalFlip => "vflip",
            Self::Rotate(_) => "rotate",
            Self::BrightnessContrast { .. } => "brightness-contrast",
            Self::Crop { .. } => "crop",
        }
    }

    /// Draw one transform for an image of the given size.
    pub fn sample(rng: &mut impl Rng, width: u32, height: u32) -> Self {
        match rng.gen_range(0..5) {
            0 => Self::HorizontalFlip,
            1 => Self::VerticalFlip,
            2 => Self::Rotate(rng.gen_range(-MAX_ROTATION_DEG..=MAX_ROTATION_DEG)),
            3 => Self::BrightnessContrast {
                brightness: rng.gen_range(-JITTER..=JITTER) * 255.0,
                contrast: rng.gen_range(1.0 - JITTER..=1.0 + JITTER),
            },
            _ => {
                let side = rng.gen_range(MIN_CROP_AREA..=1.0f64).sqrt();
                let cw = ((width as f64 * side).round() as u32).clamp(1, width);
                let ch = ((height as f64 * side).round() as u32).clamp(1, height);
                Self::Crop {
                    x: rng.gen_range(0..=width - cw),
                    y: rng.gen_range(0..=height - ch),
                    width: cw,
                    height: ch,
                }
            }
        }
    }

    pub fn apply(&self, img: &RgbImage) -> RgbImage {
        match *self {
            Self::HorizontalFlip => imageops::flip_horizontal(img),
            Self::VerticalFlip => imageops::flip_vertical(img),
            Self::Rotate(deg) => rotate(img, deg),
            Self::BrightnessContrast {
                brightness,
                contrast,
            } => adjust(img, brightness, contrast),
            Self::Crop {
                x,
                y,
                width,
                height,
            } => {
                let cropped = imageops::crop_imm(img, x, y, width, height).to_image();
                resize_u8(&cropped, img.width(), img.height())
            }
        }
    }
}

fn adjust(img: &RgbImage, brightness: f64, contrast: f64) -> RgbImage {
    let mut out = img.clone();
    for v in out.iter_mut() {
        let f = (*v as f64 - 127.5) * contrast + 127.5 + brightness;
        *v = f.round().clamp(0.0, 255.0) as u8;
    }
    out
}

fn resize_u8(img: &RgbImage, width: u32, height: u32) -> RgbImage {
    let data = resize_bilinear(
        img.as_raw(),
        img.width() as usize,
        img.height() as usize,
        width as usize,
        height as usize,
    );
    let bytes = data.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    RgbImage::from_raw(width, height, bytes).expect("buffer sized for the image")
}

/// Bilinear rotation about the pixel-grid center; samples outside the
/// source clamp to the nearest edge pixel.
pub fn rotate(img: &RgbImage, degrees: f64) -> RgbImage {
    let (w, h) = (img.width(), img.height());
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let (sin, cos) = degrees.to_radians().sin_cos();
    let max_x = w as f64 - 1.0;
    let max_y = h as f64 - 1.0;
    RgbImage::from_fn(w, h, |x, y| {
        // inverse map: destination → source
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let sx = (cos * dx - sin * dy + cx).clamp(0.0, max_x);
        let sy = (sin * dx + cos * dy + cy).clamp(0.0, max_y);
        let x0 = sx.floor() as u32;
        let y0 = sy.floor() as u32;
        let x1 = (x0 + 1).min(w - 1);
        let y1 = (y0 + 1).min(h - 1);
        let fx = sx - x0 as f64;
        let fy = sy - y0 as f64;
        let px: [u8; 3] = std::array::from_fn(|c| {
            let p = |xx, yy| img.get_pixel(xx, yy).0[c] as f64;
            let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
            let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
            (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8
        });
        Rgb(px)
    })
}

/// Exactly [`AUGMENTATIONS_PER_SAMPLE`] variants of `rec`, each from one
/// seeded transform, each differing from the source in at least one pixel.
pub fn augment_sample(rec: &ImageRecord, seed: u64) -> Vec<ImageRecord> {
    let (w, h) = rec.pixels.dimensions();
    (0..AUGMENTATIONS_PER_SAMPLE)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, j as u64));
            let mut pixels = Transform::sample(&mut rng, w, h).apply(&rec.pixels);
            if pixels == rec.pixels {
                // some pixel is below 255 or some pixel is above 0
                let up = rec.pixels.iter().any(|&v| v < 255);
                let offset = if up { FALLBACK_OFFSET } else { -FALLBACK_OFFSET };
                pixels = adjust(&rec.pixels, offset, 1.0);
            }
            rec.derived(format!("{}-a{j}", rec.id), Origin::Augmented, pixels)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(pixels: RgbImage) -> ImageRecord {
        ImageRecord {
            id: "src".into(),
            label: "Benign-1".into(),
            major: "Benign".into(),
            pixels,
            origin: Origin::Synthetic,
            source_id: None,
        }
    }

    fn smooth(w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            let fx = x as f64 / w as f64 * std::f64::consts::TAU;
            let fy = y as f64 / h as f64 * std::f64::consts::TAU;
            Rgb([
                (128.0 + 60.0 * fx.sin()) as u8,
                (128.0 + 60.0 * fy.cos()) as u8,
                (128.0 + 40.0 * (fx + fy).sin()) as u8,
            ])
        })
    }

    #[test]
    fn five_labeled_variants_that_differ() {
        for img in [
            smooth(40, 30),
            RgbImage::from_pixel(8, 8, Rgb([255, 255, 255])),
            RgbImage::from_pixel(8, 8, Rgb([0, 0, 0])),
            RgbImage::from_pixel(1, 1, Rgb([9, 9, 9])),
        ] {
            let rec = record(img);
            for seed in 0..20 {
                let out = augment_sample(&rec, seed);
                assert_eq!(out.len(), 5);
                for o in &out {
                    assert_eq!(o.label, rec.label);
                    assert_eq!(o.major, rec.major);
                    assert_eq!(o.origin, Origin::Augmented);
                    assert_eq!(o.source_id.as_deref(), Some("src"));
                    assert_eq!(o.pixels.dimensions(), rec.pixels.dimensions());
                    assert_ne!(o.pixels, rec.pixels);
                }
            }
        }
    }

    #[test]
    fn horizontal_flip_is_an_involution() {
        let img = smooth(37, 23);
        let twice = Transform::HorizontalFlip.apply(&Transform::HorizontalFlip.apply(&img));
        assert_eq!(twice, img);
    }

    #[test]
    fn rotation_roundtrip_within_three_levels() {
        let img = smooth(96, 96);
        for deg in [-25.0, -10.0, 7.5, 25.0] {
            let back = rotate(&rotate(&img, deg), -deg);
            let max = (24..72)
                .flat_map(|y| (24..72).map(move |x| (x, y)))
                .flat_map(|(x, y)| {
                    let a = img.get_pixel(x, y).0;
                    let b = back.get_pixel(x, y).0;
                    (0..3).map(move |c| (a[c] as i32 - b[c] as i32).abs())
                })
                .max()
                .unwrap();
            assert!(max < 3, "deg {deg}: max diff {max}");
        }
    }

    #[test]
    fn sampled_parameters_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..2000 {
            match Transform::sample(&mut rng, 64, 48) {
                Transform::Rotate(d) => assert!(d.abs() <= 25.0),
                Transform::BrightnessContrast {
                    brightness,
                    contrast,
                } => {
                    assert!(brightness.abs() <= 51.0);
                    assert!((0.8..=1.2).contains(&contrast));
                }
                Transform::Crop {
                    x,
                    y,
                    width,
                    height,
                } => {
                    let area = (width * height) as f64 / (64.0 * 48.0);
                    assert!(area >= 0.78 && area <= 1.0, "{area}");
                    assert!(x + width <= 64 && y + height <= 48);
                }
                _ => {}
            }
        }
    }
}
