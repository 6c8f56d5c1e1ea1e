//! Vanilla-gradient saliency: where in the input would a small brightening
//! raise the score of a class.
//!
//! The class score is the pre-sigmoid logit for stars and its negation for
//! artefacts. Only positive gradient components are kept and the map is
//! scaled so its maximum is 1. Dropout is inactive.

use std::path::Path;

use crate::data::pgm::encode_pgm;
use crate::data::Label;
use crate::error::{Error, Result};
use crate::nn::{Mode, Network};
use crate::tensor::Tensor;

/// Saliency of `target` for one `[C, H, W]` input, as an `[H, W]` map in
/// [0, 1]. Multi-channel inputs take the per-pixel maximum over channels.
pub fn saliency_map(network: &Network, pixels: &Tensor, target: Label) -> Result<Tensor> {
    let [c, h, w] = network.input_shape();
    if pixels.shape() != [c, h, w] {
        return Err(Error::shape(
            "saliency_map",
            format!("expected [{c}, {h}, {w}] input, got {:?}", pixels.shape()),
        ));
    }
    let batch = pixels.clone().reshape(vec![1, c, h, w])?;
    let trace = network.forward_trace(&batch, Mode::Eval, network.logit_depth())?;
    let sign = match target {
        Label::Star => 1.0,
        Label::Artefact => -1.0,
    };
    let seed = Tensor::full(trace.output.shape().to_vec(), sign);
    let (_, grad) = network.backward(&trace, &seed, true)?;
    let grad = grad.expect("input gradient was requested");
    let mut map = vec![0.0f64; h * w];
    for ch in 0..c {
        for (m, &g) in map.iter_mut().zip(&grad.data()[ch * h * w..(ch + 1) * h * w]) {
            *m = m.max(g);
        }
    }
    let peak = map.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        map.iter_mut().for_each(|m| *m /= peak);
    }
    Tensor::new(vec![h, w], map)
}

/// Share of the total saliency that falls inside `footprint`. Zero for an
/// all-zero map.
pub fn saliency_mass_fraction(map: &Tensor, footprint: &[bool]) -> Result<f64> {
    if footprint.len() != map.len() {
        return Err(Error::shape(
            "saliency_mass_fraction",
            format!("footprint has {} pixels, map has {}", footprint.len(), map.len()),
        ));
    }
    let total: f64 = map.data().iter().sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let inside: f64 = map.data().iter().zip(footprint).filter(|(_, &f)| f).map(|(v, _)| v).sum();
    Ok(inside / total)
}

/// 8-bit quantization, `round(255 · v)`.
pub fn quantize(map: &Tensor) -> Vec<u8> {
    map.data().iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect()
}

pub fn write_saliency_pgm(map: &Tensor, path: &Path) -> Result<()> {
    if map.ndim() != 2 {
        return Err(Error::shape("write_saliency_pgm", format!("expected [H, W], got {:?}", map.shape())));
    }
    let bytes = encode_pgm(map.shape()[1], map.shape()[0], &quantize(map))?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{LayerSpec, ModelConfig};

    fn linear(w: Vec<f64>) -> Network {
        let cfg = ModelConfig {
            name: "linear".into(),
            input_shape: [1, 2, 3],
            layers: vec![LayerSpec::Flatten, LayerSpec::Dense { units: 1 }, LayerSpec::Sigmoid],
            expected_params: None,
        };
        Network::new(cfg, vec![Tensor::new(vec![1, 6], w).unwrap(), Tensor::zeros(vec![1])]).unwrap()
    }

    #[test]
    fn linear_model_map_is_positive_weights() {
        let net = linear(vec![2.0, -1.0, 0.5, 0.0, 4.0, -3.0]);
        let x = Tensor::full(vec![1, 2, 3], 0.3);
        let star = saliency_map(&net, &x, Label::Star).unwrap();
        assert_eq!(star.data(), &[0.5, 0.0, 0.125, 0.0, 1.0, 0.0]);
        let art = saliency_map(&net, &x, Label::Artefact).unwrap();
        assert_eq!(art.data(), &[0.0, 1.0 / 3.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn zero_weights_give_zero_map() {
        let net = linear(vec![0.0; 6]);
        let map = saliency_map(&net, &Tensor::full(vec![1, 2, 3], 0.5), Label::Star).unwrap();
        assert!(map.data().iter().all(|&v| v == 0.0));
        assert_eq!(saliency_mass_fraction(&map, &[true; 6]).unwrap(), 0.0);
    }

    #[test]
    fn mass_fraction() {
        let map = Tensor::full(vec![4, 4], 0.7);
        let mut fp = vec![false; 16];
        fp[..4].iter_mut().for_each(|f| *f = true);
        assert!((saliency_mass_fraction(&map, &fp).unwrap() - 0.25).abs() < 1e-15);
        let mut m = Tensor::zeros(vec![4, 4]);
        m.data_mut()[2] = 1.0;
        assert_eq!(saliency_mass_fraction(&m, &fp).unwrap(), 1.0);
    }
}
