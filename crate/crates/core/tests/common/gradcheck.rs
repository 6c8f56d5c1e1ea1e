//! Analytic gradients against central finite differences. Every check
//! returns the worst relative error it saw.

use super::{dot, max_rel_error, numeric_grad, random_tensor, rng};
use artefact_net::nn::rng::{derived, Purpose};
use artefact_net::nn::{bce_loss, dropout_forward, DropoutMode, LayerSpec, ModelConfig, Mode, Network};
use artefact_net::nn::dropout::dropout_backward;
use artefact_net::tensor::{
    conv2d_backward, conv2d_forward, dense_backward_batch, dense_forward_batch, maxpool2d_backward,
    maxpool2d_forward, relu, relu_backward, sigmoid, sigmoid_backward, ConvSpec, Padding,
};
use artefact_net::Tensor;
use rand::seq::SliceRandom;
use rand::Rng;

const H: f64 = 1e-6;
const FLOOR: f64 = 1e-7;

pub fn conv(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (ci, co) = (r.random_range(1..4), r.random_range(1..4));
    let stride = r.random_range(1..3);
    let spec = ConvSpec { in_channels: ci, out_channels: co, kernel_h: 3, kernel_w: 3, stride, padding: Padding::Valid };
    let x = random_tensor(&mut r, vec![ci, 7, 6], 1.0);
    let w = random_tensor(&mut r, vec![co, ci, 3, 3], 1.0);
    let b = random_tensor(&mut r, vec![co], 1.0);
    let y = conv2d_forward(&x, &w, &b, &spec).unwrap();
    let g = random_tensor(&mut r, y.shape().to_vec(), 1.0);
    let grads = conv2d_backward(&g, &x, &w, &spec).unwrap();
    let nx = numeric_grad(&x, H, |x| dot(&g, &conv2d_forward(x, &w, &b, &spec).unwrap()));
    let nw = numeric_grad(&w, H, |w| dot(&g, &conv2d_forward(&x, w, &b, &spec).unwrap()));
    let nb = numeric_grad(&b, H, |b| dot(&g, &conv2d_forward(&x, &w, b, &spec).unwrap()));
    max_rel_error(grads.input.as_ref().unwrap(), &nx, FLOOR)
        .max(max_rel_error(&grads.weights, &nw, FLOOR))
        .max(max_rel_error(&grads.bias, &nb, FLOOR))
}

pub fn dense(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (n, m, batch) = (r.random_range(1..9), r.random_range(1..6), r.random_range(1..4));
    let x = random_tensor(&mut r, vec![batch, n], 1.0);
    let w = random_tensor(&mut r, vec![m, n], 1.0);
    let b = random_tensor(&mut r, vec![m], 1.0);
    let g = random_tensor(&mut r, vec![batch, m], 1.0);
    let grads = dense_backward_batch(&g, &x, &w).unwrap();
    let nx = numeric_grad(&x, H, |x| dot(&g, &dense_forward_batch(x, &w, &b).unwrap()));
    let nw = numeric_grad(&w, H, |w| dot(&g, &dense_forward_batch(&x, w, &b).unwrap()));
    let nb = numeric_grad(&b, H, |b| dot(&g, &dense_forward_batch(&x, &w, b).unwrap()));
    max_rel_error(&grads.input, &nx, FLOOR)
        .max(max_rel_error(&grads.weights, &nw, FLOOR))
        .max(max_rel_error(&grads.bias, &nb, FLOOR))
}

/// Inputs are a shuffled grid with spacing 0.01, far larger than the
/// probe step, so no probe changes which element wins a window.
pub fn maxpool(seed: u64) -> f64 {
    let mut r = rng(seed);
    let shape = vec![2, 6, 7];
    let mut values: Vec<f64> = (0..84).map(|i| i as f64 * 0.01 - 0.4).collect();
    values.shuffle(&mut r);
    let x = Tensor::new(shape.clone(), values).unwrap();
    let p = maxpool2d_forward(&x, 2).unwrap();
    let g = random_tensor(&mut r, p.output.shape().to_vec(), 1.0);
    let analytic = maxpool2d_backward(&g, &p.argmax, &shape).unwrap();
    let numeric = numeric_grad(&x, H, |x| dot(&g, &maxpool2d_forward(x, 2).unwrap().output));
    max_rel_error(&analytic, &numeric, FLOOR)
}

/// Inputs keep at least 0.01 away from the kink at zero.
pub fn relu_layer(seed: u64) -> f64 {
    let mut r = rng(seed);
    let x = Tensor::from_fn(vec![3, 5], |_| {
        let v: f64 = r.random_range(0.01..2.0);
        if r.random_bool(0.5) { v } else { -v }
    });
    let g = random_tensor(&mut r, vec![3, 5], 1.0);
    let analytic = relu_backward(&g, &x).unwrap();
    let numeric = numeric_grad(&x, H, |x| dot(&g, &relu(x)));
    max_rel_error(&analytic, &numeric, FLOOR)
}

pub fn sigmoid_layer(seed: u64) -> f64 {
    let mut r = rng(seed);
    let x = random_tensor(&mut r, vec![4, 3], 6.0);
    let g = random_tensor(&mut r, vec![4, 3], 1.0);
    let analytic = sigmoid_backward(&g, &sigmoid(&x)).unwrap();
    let numeric = numeric_grad(&x, H, |x| dot(&g, &sigmoid(x)));
    max_rel_error(&analytic, &numeric, FLOOR)
}

/// The same generator state for every evaluation gives a fixed mask.
pub fn dropout_layer(seed: u64) -> f64 {
    let mut r = rng(seed);
    let x = random_tensor(&mut r, vec![20], 1.0);
    let g = random_tensor(&mut r, vec![20], 1.0);
    let run = |x: &Tensor| dropout_forward(x, 0.4, DropoutMode::Train, &mut derived(seed, Purpose::Dropout, 0));
    let (_, mask) = run(&x);
    let analytic = dropout_backward(&g, mask.as_deref());
    let numeric = numeric_grad(&x, H, |x| dot(&g, &run(x).0));
    max_rel_error(&analytic, &numeric, FLOOR)
}

pub fn bce(seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p: f64 = r.random_range(0.01..0.99);
        let y = if r.random_bool(0.5) { 1.0 } else { 0.0 };
        let (_, a) = bce_loss(p, y).unwrap();
        let n = (bce_loss(p + H, y).unwrap().0 - bce_loss(p - H, y).unwrap().0) / (2.0 * H);
        worst = worst.max((a - n).abs() / a.abs().max(n.abs()).max(FLOOR));
    }
    worst
}

pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        name: "tiny".into(),
        input_shape: [1, 8, 8],
        layers: vec![
            LayerSpec::Conv { filters: 2, kernel: 3, stride: 1 },
            LayerSpec::Relu,
            LayerSpec::MaxPool { window: 2 },
            LayerSpec::Conv { filters: 3, kernel: 3, stride: 1 },
            LayerSpec::Relu,
            LayerSpec::Dropout { p: 0.3 },
            LayerSpec::Flatten,
            LayerSpec::Dense { units: 4 },
            LayerSpec::Relu,
            LayerSpec::Dense { units: 1 },
            LayerSpec::Sigmoid,
        ],
        expected_params: None,
    }
}

/// Mean BCE of a two-sample batch through [`tiny_config`], dropout active
/// with a fixed generator. Checks every parameter and the input.
pub fn end_to_end(seed: u64) -> f64 {
    let mut r = rng(seed);
    let net = Network::init(tiny_config(), seed).unwrap();
    let x = Tensor::from_fn(vec![2, 1, 8, 8], |_| r.random_range(0.0..1.0));
    let labels = [1.0, 0.0];
    let loss = |net: &Network, x: &Tensor| -> f64 {
        let mut d = derived(seed, Purpose::Dropout, 7);
        let out = net.forward(x, Mode::Train(&mut d)).unwrap();
        out.data().iter().zip(labels).map(|(&p, y)| bce_loss(p, y).unwrap().0).sum::<f64>() / 2.0
    };

    let mut d = derived(seed, Purpose::Dropout, 7);
    let trace = net.forward_trace(&x, Mode::Train(&mut d), net.config().layers.len()).unwrap();
    let grad_out = Tensor::from_fn(vec![2, 1], |i| bce_loss(trace.output.data()[i], labels[i]).unwrap().1 / 2.0);
    let (grads, gx) = net.backward(&trace, &grad_out, true).unwrap();

    let mut worst = max_rel_error(&gx.unwrap(), &numeric_grad(&x, H, |x| loss(&net, x)), FLOOR);
    for (k, g) in grads.iter().enumerate() {
        let numeric = numeric_grad(&net.params()[k], H, |p| {
            let mut probe = net.clone();
            probe.params_mut()[k] = p.clone();
            loss(&probe, &x)
        });
        worst = worst.max(max_rel_error(g, &numeric, FLOOR));
    }
    worst
}
