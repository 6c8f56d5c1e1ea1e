//! Random geometric augmentation of normalized images.
//!
//! Each draw independently applies a horizontal flip, a vertical flip and a
//! 180° rotation (each with probability 1/2), then an integer shift and a
//! horizontal shear resampled bilinearly. Pixels pulled from outside the
//! image take the nearest edge value.

use rand::Rng as _;

use super::sample::Sample;
use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::nn::rng::{derived, Purpose, Rng};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentPolicy {
    pub horizontal_flip: bool,
    pub vertical_flip: bool,
    pub rotate_180: bool,
    /// Each transform above fires with this probability.
    pub flip_probability: f64,
    /// Shifts are drawn uniformly from `-max_shift..=max_shift` per axis.
    pub max_shift: usize,
    /// Shear angle is drawn uniformly from `±max_shear_deg`.
    pub max_shear_deg: f64,
}

impl AugmentPolicy {
    /// Flips, 180° rotation, ±6 px shifts and ±11° shear.
    pub fn standard() -> Self {
        Self {
            horizontal_flip: true,
            vertical_flip: true,
            rotate_180: true,
            flip_probability: 0.5,
            max_shift: 6,
            max_shear_deg: 11.0,
        }
    }

    pub fn identity() -> Self {
        Self {
            horizontal_flip: false,
            vertical_flip: false,
            rotate_180: false,
            flip_probability: 0.5,
            max_shift: 0,
            max_shear_deg: 0.0,
        }
    }

    pub fn is_identity(&self) -> bool {
        !self.horizontal_flip
            && !self.vertical_flip
            && !self.rotate_180
            && self.max_shift == 0
            && self.max_shear_deg == 0.0
    }
}

impl AugmentPolicy {
    /// `augment = standard | none`, then individual `augment.*` overrides.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let base = match kv.get_str("augment")? {
            None | Some("standard") => Self::standard(),
            Some("none") => Self::identity(),
            Some(other) => return Err(Error::Config(format!("augment: unknown policy `{other}`"))),
        };
        let p = Self {
            horizontal_flip: kv.get_bool("augment.horizontal_flip", base.horizontal_flip)?,
            vertical_flip: kv.get_bool("augment.vertical_flip", base.vertical_flip)?,
            rotate_180: kv.get_bool("augment.rotate_180", base.rotate_180)?,
            flip_probability: kv.get_or("augment.flip_probability", base.flip_probability)?,
            max_shift: kv.get_or("augment.max_shift", base.max_shift)?,
            max_shear_deg: kv.get_or("augment.max_shear_deg", base.max_shear_deg)?,
        };
        if !(0.0..=1.0).contains(&p.flip_probability) || !(p.max_shear_deg >= 0.0 && p.max_shear_deg < 90.0) {
            return Err(Error::Config("augment: flip_probability must be in [0, 1], shear in [0, 90)".into()));
        }
        Ok(p)
    }
}

impl Default for AugmentPolicy {
    fn default() -> Self {
        Self::standard()
    }
}

/// Generator for draw `index` of `epoch`. Streams are independent, so
/// samples can be augmented in any order or in parallel.
pub fn augment_rng(seed: u64, epoch: u64, index: u64) -> Rng {
    derived(seed, Purpose::Augment, (epoch << 32) | (index & 0xffff_ffff))
}

fn map_planes(img: &Tensor, f: impl Fn(&[f64], usize, usize, &mut [f64])) -> Tensor {
    let (h, w) = (img.shape()[1], img.shape()[2]);
    let mut out = img.clone();
    for (src, dst) in img.data().chunks(h * w).zip(out.data_mut().chunks_mut(h * w)) {
        f(src, h, w, dst);
    }
    out
}

pub fn flip_horizontal(img: &Tensor) -> Tensor {
    map_planes(img, |src, h, w, dst| {
        for r in 0..h {
            for c in 0..w {
                dst[r * w + c] = src[r * w + (w - 1 - c)];
            }
        }
    })
}

pub fn flip_vertical(img: &Tensor) -> Tensor {
    map_planes(img, |src, h, w, dst| {
        for r in 0..h {
            dst[r * w..(r + 1) * w].copy_from_slice(&src[(h - 1 - r) * w..(h - r) * w]);
        }
    })
}

pub fn rotate_180(img: &Tensor) -> Tensor {
    map_planes(img, |src, _, _, dst| {
        for (d, s) in dst.iter_mut().zip(src.iter().rev()) {
            *d = *s;
        }
    })
}

/// Moves content by `(dx, dy)` pixels and shears rows horizontally by
/// `angle_rad` about the image centre, sampling bilinearly with edge clamping.
pub fn shift_and_shear(img: &Tensor, dx: i64, dy: i64, angle_rad: f64) -> Tensor {
    let slope = angle_rad.tan();
    map_planes(img, |src, h, w, dst| {
        let cy = (h as f64 - 1.0) / 2.0;
        let px = |r: usize, c: usize| src[r * w + c];
        for r in 0..h {
            let sy = (r as f64 - dy as f64).clamp(0.0, (h - 1) as f64);
            let y0 = sy.floor() as usize;
            let y1 = (y0 + 1).min(h - 1);
            let fy = sy - y0 as f64;
            let offset = slope * (r as f64 - cy);
            for c in 0..w {
                let sx = (c as f64 - dx as f64 + offset).clamp(0.0, (w - 1) as f64);
                let x0 = sx.floor() as usize;
                let x1 = (x0 + 1).min(w - 1);
                let fx = sx - x0 as f64;
                let top = (1.0 - fx) * px(y0, x0) + fx * px(y0, x1);
                let bottom = (1.0 - fx) * px(y1, x0) + fx * px(y1, x1);
                dst[r * w + c] = ((1.0 - fy) * top + fy * bottom).clamp(0.0, 1.0);
            }
        }
    })
}

/// One random augmentation of a `[C, H, W]` image.
pub fn augment(pixels: &Tensor, rng: &mut Rng, policy: &AugmentPolicy) -> Tensor {
    if policy.is_identity() {
        return pixels.clone();
    }
    let mut img = pixels.clone();
    if policy.horizontal_flip && rng.random_bool(policy.flip_probability) {
        img = flip_horizontal(&img);
    }
    if policy.vertical_flip && rng.random_bool(policy.flip_probability) {
        img = flip_vertical(&img);
    }
    if policy.rotate_180 && rng.random_bool(policy.flip_probability) {
        img = rotate_180(&img);
    }
    let s = policy.max_shift as i64;
    let (dx, dy) = if s > 0 {
        (rng.random_range(-s..=s), rng.random_range(-s..=s))
    } else {
        (0, 0)
    };
    let angle = if policy.max_shear_deg > 0.0 {
        rng.random_range(-policy.max_shear_deg..=policy.max_shear_deg).to_radians()
    } else {
        0.0
    };
    if dx != 0 || dy != 0 || angle != 0.0 {
        img = shift_and_shear(&img, dx, dy, angle);
    }
    img
}

pub fn augment_sample(sample: &Sample, rng: &mut Rng, policy: &AugmentPolicy) -> Sample {
    Sample {
        pixels: augment(&sample.pixels, rng, policy),
        ..sample.clone()
    }
}

/// Augments every sample of one epoch, using up to `threads` worker threads.
/// Sample `i` always uses stream `augment_rng(seed, epoch, i)`, so the result
/// does not depend on `threads`.
pub fn augment_all(samples: &[Sample], seed: u64, epoch: u64, policy: &AugmentPolicy, threads: usize) -> Vec<Sample> {
    let one = |i: usize, s: &Sample| augment_sample(s, &mut augment_rng(seed, epoch, i as u64), policy);
    let threads = threads.max(1);
    if threads == 1 || samples.len() < 2 {
        return samples.iter().enumerate().map(|(i, s)| one(i, s)).collect();
    }
    let chunk = samples.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = samples
            .chunks(chunk)
            .enumerate()
            .map(|(k, part)| {
                scope.spawn(move || {
                    part.iter()
                        .enumerate()
                        .map(|(j, s)| one(k * chunk + j, s))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("augmentation worker panicked"))
            .collect()
    })
}
