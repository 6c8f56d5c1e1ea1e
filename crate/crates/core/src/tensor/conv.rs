use super::{check_dim, gemm, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Only fully overlapping windows; each spatial extent shrinks by `kernel - 1`.
    Valid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub stride: usize,
    pub padding: Padding,
}

impl ConvSpec {
    /// 3×3, stride 1, valid padding.
    pub fn square3(in_channels: usize, out_channels: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel_h: 3,
            kernel_w: 3,
            stride: 1,
            padding: Padding::Valid,
        }
    }

    pub fn output_hw(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        if self.stride == 0 || h < self.kernel_h || w < self.kernel_w {
            return None;
        }
        Some((
            (h - self.kernel_h) / self.stride + 1,
            (w - self.kernel_w) / self.stride + 1,
        ))
    }

    fn patch_len(&self) -> usize {
        self.in_channels * self.kernel_h * self.kernel_w
    }

    fn check(&self, op: &'static str, input: &Tensor, weights: &Tensor) -> Result<(usize, usize)> {
        input.expect_rank(op, 3)?;
        weights.expect_rank(op, 4)?;
        check_dim(op, "input channels", self.in_channels, input.shape()[0])?;
        check_dim(op, "weight out channels", self.out_channels, weights.shape()[0])?;
        check_dim(op, "weight in channels", self.in_channels, weights.shape()[1])?;
        check_dim(op, "kernel height", self.kernel_h, weights.shape()[2])?;
        check_dim(op, "kernel width", self.kernel_w, weights.shape()[3])?;
        let (h, w) = (input.shape()[1], input.shape()[2]);
        self.output_hw(h, w).ok_or_else(|| {
            Error::shape(
                op,
                format!(
                    "input {h}x{w} smaller than kernel {}x{} (or zero stride)",
                    self.kernel_h, self.kernel_w
                ),
            )
        })
    }
}

/// Unfolds every receptive field into a column: the result is
/// `[C_in·kh·kw, H'·W']`, row-major.
fn im2col(input: &Tensor, spec: &ConvSpec, oh: usize, ow: usize) -> Vec<f64> {
    let (h, w) = (input.shape()[1], input.shape()[2]);
    let x = input.data();
    let p = oh * ow;
    let mut col = vec![0.0; spec.patch_len() * p];
    let mut row = 0;
    for c in 0..spec.in_channels {
        let plane = &x[c * h * w..(c + 1) * h * w];
        for ki in 0..spec.kernel_h {
            for kj in 0..spec.kernel_w {
                let dst = &mut col[row * p..(row + 1) * p];
                for oy in 0..oh {
                    let src_row = &plane[(oy * spec.stride + ki) * w..];
                    let d = &mut dst[oy * ow..(oy + 1) * ow];
                    if spec.stride == 1 {
                        d.copy_from_slice(&src_row[kj..kj + ow]);
                    } else {
                        for (ox, v) in d.iter_mut().enumerate() {
                            *v = src_row[ox * spec.stride + kj];
                        }
                    }
                }
                row += 1;
            }
        }
    }
    col
}

/// Inverse scatter of [`im2col`]: accumulates column gradients back onto the
/// input grid.
fn col2im(col: &[f64], spec: &ConvSpec, h: usize, w: usize, oh: usize, ow: usize) -> Vec<f64> {
    let p = oh * ow;
    let mut out = vec![0.0; spec.in_channels * h * w];
    let mut row = 0;
    for c in 0..spec.in_channels {
        let plane = &mut out[c * h * w..(c + 1) * h * w];
        for ki in 0..spec.kernel_h {
            for kj in 0..spec.kernel_w {
                let src = &col[row * p..(row + 1) * p];
                for oy in 0..oh {
                    let base = (oy * spec.stride + ki) * w + kj;
                    let s = &src[oy * ow..(oy + 1) * ow];
                    if spec.stride == 1 {
                        for (d, v) in plane[base..base + ow].iter_mut().zip(s) {
                            *d += v;
                        }
                    } else {
                        for (ox, v) in s.iter().enumerate() {
                            plane[base + ox * spec.stride] += v;
                        }
                    }
                }
                row += 1;
            }
        }
    }
    out
}

/// Cross-correlation (no kernel flip) plus a per-output-channel bias.
pub fn conv2d_forward(
    input: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    spec: &ConvSpec,
) -> Result<Tensor> {
    const OP: &str = "conv2d_forward";
    let (oh, ow) = spec.check(OP, input, weights)?;
    bias.expect_rank(OP, 1)?;
    check_dim(OP, "bias", spec.out_channels, bias.len())?;

    let p = oh * ow;
    let col = im2col(input, spec, oh, ow);
    let mut out = vec![0.0; spec.out_channels * p];
    for (chunk, &b) in out.chunks_mut(p.max(1)).zip(bias.data()) {
        chunk.fill(b);
    }
    gemm(
        spec.out_channels,
        spec.patch_len(),
        p,
        weights.data(),
        false,
        &col,
        false,
        1.0,
        &mut out,
    );
    Tensor::new(vec![spec.out_channels, oh, ow], out)
}

#[derive(Debug, Clone)]
pub struct ConvGrads {
    /// `None` when the caller asked to skip the input gradient.
    pub input: Option<Tensor>,
    pub weights: Tensor,
    pub bias: Tensor,
}

/// Exact gradients of [`conv2d_forward`] with respect to its input, weights
/// and bias, given the upstream gradient and the forward input.
pub fn conv2d_backward(
    grad_out: &Tensor,
    cached_input: &Tensor,
    weights: &Tensor,
    spec: &ConvSpec,
) -> Result<ConvGrads> {
    conv2d_backward_impl(grad_out, cached_input, weights, spec, true)
}

pub(crate) fn conv2d_backward_impl(
    grad_out: &Tensor,
    cached_input: &Tensor,
    weights: &Tensor,
    spec: &ConvSpec,
    want_input: bool,
) -> Result<ConvGrads> {
    const OP: &str = "conv2d_backward";
    let (oh, ow) = spec.check(OP, cached_input, weights)?;
    grad_out.expect_rank(OP, 3)?;
    check_dim(OP, "grad channels", spec.out_channels, grad_out.shape()[0])?;
    check_dim(OP, "grad height", oh, grad_out.shape()[1])?;
    check_dim(OP, "grad width", ow, grad_out.shape()[2])?;

    let p = oh * ow;
    let k = spec.patch_len();
    let g = grad_out.data();
    let col = im2col(cached_input, spec, oh, ow);

    let mut grad_w = vec![0.0; spec.out_channels * k];
    gemm(spec.out_channels, p, k, g, false, &col, true, 0.0, &mut grad_w);

    let grad_b: Vec<f64> = g.chunks(p.max(1)).map(|c| c.iter().sum()).collect();

    let input = if want_input {
        let mut grad_col = vec![0.0; k * p];
        gemm(k, spec.out_channels, p, weights.data(), true, g, false, 0.0, &mut grad_col);
        let (h, w) = (cached_input.shape()[1], cached_input.shape()[2]);
        let gi = col2im(&grad_col, spec, h, w, oh, ow);
        Some(Tensor::new(cached_input.shape().to_vec(), gi)?)
    } else {
        None
    };

    Ok(ConvGrads {
        input,
        weights: Tensor::new(weights.shape().to_vec(), grad_w)?,
        bias: Tensor::new(vec![spec.out_channels], grad_b)?,
    })
}
