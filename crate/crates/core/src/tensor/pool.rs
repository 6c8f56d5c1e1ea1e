use super::{check_dim, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PoolOutput {
    pub output: Tensor,
    /// Flat input offset of the winning element for every output cell.
    pub argmax: Vec<usize>,
}

/// Non-overlapping max pooling with stride equal to `window`. Trailing rows
/// and columns that do not fill a window are dropped. Ties go to the first
/// element in row-major scan order; a NaN anywhere in a window wins it.
pub fn maxpool2d_forward(input: &Tensor, window: usize) -> Result<PoolOutput> {
    const OP: &str = "maxpool2d_forward";
    input.expect_rank(OP, 3)?;
    if window == 0 {
        return Err(Error::shape(OP, "window must be positive"));
    }
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (oh, ow) = (h / window, w / window);
    let x = input.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut argmax = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        let base = ch * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = base + oy * window * w + ox * window;
                for dy in 0..window {
                    let row = base + (oy * window + dy) * w + ox * window;
                    for idx in row..row + window {
                        if x[idx] > x[best] || (x[idx].is_nan() && !x[best].is_nan()) {
                            best = idx;
                        }
                    }
                }
                out.push(x[best]);
                argmax.push(best);
            }
        }
    }
    Ok(PoolOutput {
        output: Tensor::new(vec![c, oh, ow], out)?,
        argmax,
    })
}

/// Routes each upstream gradient to the input element that won the forward
/// max.
pub fn maxpool2d_backward(
    grad_out: &Tensor,
    argmax: &[usize],
    input_shape: &[usize],
) -> Result<Tensor> {
    const OP: &str = "maxpool2d_backward";
    check_dim(OP, "cells", argmax.len(), grad_out.len())?;
    let mut grad = Tensor::zeros(input_shape.to_vec());
    let g = grad.data_mut();
    for (&idx, &v) in argmax.iter().zip(grad_out.data()) {
        if idx >= g.len() {
            return Err(Error::shape(OP, format!("argmax offset {idx} out of range")));
        }
        g[idx] += v;
    }
    Ok(grad)
}
