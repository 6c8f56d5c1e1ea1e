//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use artefact_net::data::{Label, MaskSpec, SourceRecord};
use artefact_net::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: Vec<usize>, scale: f64) -> Tensor {
    Tensor::from_fn(shape, |_| rng.random_range(-scale..scale))
}

/// Direct 6-loop valid cross-correlation.
pub fn naive_conv(x: &Tensor, w: &Tensor, b: &Tensor, stride: usize) -> Tensor {
    let (ci, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (co, kh, kw) = (w.shape()[0], w.shape()[2], w.shape()[3]);
    let oh = (h - kh) / stride + 1;
    let ow = (wd - kw) / stride + 1;
    let mut out = Tensor::zeros(vec![co, oh, ow]);
    for o in 0..co {
        for r in 0..oh {
            for c in 0..ow {
                let mut acc = b.data()[o];
                for i in 0..ci {
                    for u in 0..kh {
                        for v in 0..kw {
                            acc += w.at(&[o, i, u, v]) * x.at(&[i, r * stride + u, c * stride + v]);
                        }
                    }
                }
                out.set(&[o, r, c], acc);
            }
        }
    }
    out
}

/// Fraction of (star, artefact) pairs where the star scores higher, ties
/// counting half.
pub fn concordance(scores: &[f64], labels: &[Label]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != Label::Star {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != Label::Artefact {
                continue;
            }
            pairs += 1.0;
            num += if si > sj {
                1.0
            } else if si == sj {
                0.5
            } else {
                0.0
            };
        }
    }
    num / pairs
}

/// Brute-force mask test: walk every pixel of the cutout box.
pub fn box_is_masked(source: &SourceRecord, mask: &MaskSpec, size: i64) -> bool {
    let round = |v: f64| (v + 0.5).floor() as i64;
    let (ox, oy) = (round(source.x) - size / 2, round(source.y) - size / 2);
    for y in oy..oy + size {
        for x in ox..ox + size {
            if mask.regions.iter().any(|r| x >= r.x0 && x <= r.x1 && y >= r.y0 && y <= r.y1) {
                return true;
            }
        }
    }
    false
}

pub fn box_leaves_frame(source: &SourceRecord, width: i64, height: i64, size: i64) -> bool {
    let round = |v: f64| (v + 0.5).floor() as i64;
    let (ox, oy) = (round(source.x) - size / 2, round(source.y) - size / 2);
    ox < 0 || oy < 0 || ox + size > width || oy + size > height
}

/// Central differences of a scalar function over every element of `x`.
pub fn numeric_grad(x: &Tensor, h: f64, mut f: impl FnMut(&Tensor) -> f64) -> Tensor {
    let mut g = Tensor::zeros(x.shape().to_vec());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let up = f(&probe);
        probe.data_mut()[i] = orig - h;
        let down = f(&probe);
        probe.data_mut()[i] = orig;
        g.data_mut()[i] = (up - down) / (2.0 * h);
    }
    g
}

/// max |a − n| / max(|a|, |n|, floor) over all elements.
pub fn max_rel_error(analytic: &Tensor, numeric: &Tensor, floor: f64) -> f64 {
    assert_eq!(analytic.shape(), numeric.shape());
    analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

pub fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}
pub mod gradcheck;
pub mod roundtrip;
pub mod invariants;

/// Scores drawn from a small grid, so ties are common.
pub fn auc_fixture(seed: u64) -> (Vec<f64>, Vec<Label>) {
    let mut r = rng(seed);
    let n = r.random_range(2..=200);
    let coarse = r.random_bool(0.5);
    let mut labels: Vec<Label> = (0..n).map(|_| if r.random_bool(0.5) { Label::Star } else { Label::Artefact }).collect();
    labels[0] = Label::Star;
    labels[1] = Label::Artefact;
    let scores = labels
        .iter()
        .map(|&l| {
            let shift = if l == Label::Star { 0.15 } else { 0.0 };
            let s: f64 = (r.random_range(0.0f64..0.85) + shift).min(1.0);
            if coarse { (s * 20.0).round() / 20.0 } else { s }
        })
        .collect();
    (scores, labels)
}
