use rand::Rng as _;

use super::rng::Rng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutMode {
    Train,
    Eval,
}

/// Inverted dropout. In training mode each element is zeroed with
/// probability `p` and survivors are scaled by `1/(1-p)`; the returned mask
/// holds those per-element factors. Evaluation mode is the identity and
/// returns no mask.
pub fn dropout_forward(input: &Tensor, p: f64, mode: DropoutMode, rng: &mut Rng) -> (Tensor, Option<Vec<f64>>) {
    if mode == DropoutMode::Eval || p == 0.0 {
        return (input.clone(), None);
    }
    let keep = 1.0 / (1.0 - p);
    let mask: Vec<f64> = (0..input.len())
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect();
    let mut out = input.clone();
    for (v, m) in out.data_mut().iter_mut().zip(&mask) {
        *v *= m;
    }
    (out, Some(mask))
}

pub fn dropout_backward(grad_out: &Tensor, mask: Option<&[f64]>) -> Tensor {
    let mut g = grad_out.clone();
    if let Some(mask) = mask {
        for (v, m) in g.data_mut().iter_mut().zip(mask) {
            *v *= m;
        }
    }
    g
}
