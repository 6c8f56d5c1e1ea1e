use super::{check_dim, gemm, Tensor};
use crate::error::Result;

/// Affine map `weights · input + bias` for a single vector.
pub fn dense_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    const OP: &str = "dense_forward";
    input.expect_rank(OP, 1)?;
    let batch = Tensor::new(vec![1, input.len()], input.data().to_vec())?;
    let out = dense_forward_batch(&batch, weights, bias)?;
    let m = out.len();
    out.reshape(vec![m])
}

fn check(op: &'static str, input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<()> {
    input.expect_rank(op, 2)?;
    weights.expect_rank(op, 2)?;
    bias.expect_rank(op, 1)?;
    check_dim(op, "input features", weights.shape()[1], input.shape()[1])?;
    check_dim(op, "bias", weights.shape()[0], bias.len())
}

/// Row-wise affine map over a `[N, n]` batch, producing `[N, m]`.
pub fn dense_forward_batch(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    check("dense_forward", input, weights, bias)?;
    let (batch, n) = (input.shape()[0], input.shape()[1]);
    let m = weights.shape()[0];
    let mut out = Vec::with_capacity(batch * m);
    for _ in 0..batch {
        out.extend_from_slice(bias.data());
    }
    gemm(batch, n, m, input.data(), false, weights.data(), true, 1.0, &mut out);
    Tensor::new(vec![batch, m], out)
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

/// Gradients of [`dense_forward_batch`]; weight and bias gradients are summed
/// over the batch.
pub fn dense_backward_batch(grad_out: &Tensor, input: &Tensor, weights: &Tensor) -> Result<DenseGrads> {
    const OP: &str = "dense_backward";
    grad_out.expect_rank(OP, 2)?;
    input.expect_rank(OP, 2)?;
    weights.expect_rank(OP, 2)?;
    let (batch, n) = (input.shape()[0], input.shape()[1]);
    let m = weights.shape()[0];
    check_dim(OP, "batch", batch, grad_out.shape()[0])?;
    check_dim(OP, "output features", m, grad_out.shape()[1])?;
    check_dim(OP, "input features", n, weights.shape()[1])?;

    let g = grad_out.data();
    let mut grad_w = vec![0.0; m * n];
    gemm(m, batch, n, g, true, input.data(), false, 0.0, &mut grad_w);
    let mut grad_x = vec![0.0; batch * n];
    gemm(batch, m, n, g, false, weights.data(), false, 0.0, &mut grad_x);
    let mut grad_b = vec![0.0; m];
    for row in g.chunks(m.max(1)) {
        for (b, v) in grad_b.iter_mut().zip(row) {
            *b += v;
        }
    }
    Ok(DenseGrads {
        input: Tensor::new(vec![batch, n], grad_x)?,
        weights: Tensor::new(vec![m, n], grad_w)?,
        bias: Tensor::new(vec![m], grad_b)?,
    })
}
