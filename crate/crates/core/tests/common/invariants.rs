//! Augmentation invariants on randomized images.

use artefact_net::data::augment::{augment, augment_all, augment_rng, flip_horizontal, flip_vertical, rotate_180};
use artefact_net::data::{AugmentPolicy, Label, Sample};
use artefact_net::Tensor;
use rand::Rng;

type Check = Result<(), String>;

pub fn random_image(seed: u64, c: usize, h: usize, w: usize) -> Tensor {
    let mut r = super::rng(seed);
    Tensor::from_fn(vec![c, h, w], |_| r.random_range(0.0..=1.0))
}

fn sorted(t: &Tensor) -> Vec<f64> {
    let mut v = t.data().to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn rotation_is_an_involution(img: &Tensor) -> Check {
    if rotate_180(&rotate_180(img)) != *img {
        return Err("rot180 ∘ rot180 ≠ identity".into());
    }
    Ok(())
}

pub fn flips_preserve_pixels(img: &Tensor) -> Check {
    let want = sorted(img);
    for (name, out) in [("horizontal", flip_horizontal(img)), ("vertical", flip_vertical(img)), ("rot180", rotate_180(img))] {
        if sorted(&out) != want {
            return Err(format!("{name} flip changed the pixel multiset"));
        }
    }
    Ok(())
}

pub fn outputs_in_unit_range(img: &Tensor, seed: u64, draws: u64) -> Check {
    for i in 0..draws {
        let out = augment(img, &mut augment_rng(seed, 0, i), &AugmentPolicy::standard());
        if out.shape() != img.shape() {
            return Err(format!("draw {i}: shape {:?}", out.shape()));
        }
        if let Some(v) = out.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(format!("draw {i}: value {v} outside [0, 1]"));
        }
    }
    Ok(())
}

pub fn parallel_equals_serial(n: usize, seed: u64) -> Check {
    let samples: Vec<Sample> = (0..n)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Star } else { Label::Artefact };
            Sample::from_tensor(random_image(seed + i as u64, 1, 16, 16), label, i as u64, 0).unwrap()
        })
        .collect();
    let serial = augment_all(&samples, seed, 3, &AugmentPolicy::standard(), 1);
    for threads in [2, 3, 8] {
        if augment_all(&samples, seed, 3, &AugmentPolicy::standard(), threads) != serial {
            return Err(format!("{threads} threads differ from serial"));
        }
    }
    Ok(())
}
