use super::{check_dim, Tensor};
use crate::error::Result;

/// NaN passes through so a diverged network is noticed downstream.
pub fn relu(input: &Tensor) -> Tensor {
    input.map(|v| if v > 0.0 || v.is_nan() { v } else { 0.0 })
}

/// Passes the gradient where the forward input was strictly positive.
pub fn relu_backward(grad_out: &Tensor, input: &Tensor) -> Result<Tensor> {
    check_dim("relu_backward", "elements", input.len(), grad_out.len())?;
    let data = grad_out
        .data()
        .iter()
        .zip(input.data())
        .map(|(&g, &x)| if x > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::new(input.shape().to_vec(), data)
}

pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(input: &Tensor) -> Tensor {
    input.map(sigmoid_scalar)
}

/// Takes the forward *output* `s` and returns `s·(1−s)·grad_out`.
pub fn sigmoid_backward(grad_out: &Tensor, output: &Tensor) -> Result<Tensor> {
    check_dim("sigmoid_backward", "elements", output.len(), grad_out.len())?;
    let data = grad_out
        .data()
        .iter()
        .zip(output.data())
        .map(|(&g, &s)| s * (1.0 - s) * g)
        .collect();
    Tensor::new(output.shape().to_vec(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_keeps_nan() {
        let y = relu(&Tensor::new(vec![3], vec![f64::NAN, -1.0, 2.0]).unwrap());
        assert!(y.data()[0].is_nan());
        assert_eq!(&y.data()[1..], &[0.0, 2.0]);
    }

    #[test]
    fn relu_values() {
        let x = Tensor::new(vec![3], vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.0]);
        let g = relu_backward(&Tensor::full(vec![3], 1.0), &x).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn sigmoid_at_zero_and_tails() {
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        assert!(sigmoid_scalar(-800.0) >= 0.0);
        assert_eq!(sigmoid_scalar(800.0), 1.0);
        let s = sigmoid(&Tensor::zeros(vec![1]));
        let g = sigmoid_backward(&Tensor::full(vec![1], 1.0), &s).unwrap();
        assert_eq!(g.data(), &[0.25]);
    }
}
