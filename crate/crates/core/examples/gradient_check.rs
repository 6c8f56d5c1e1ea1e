//! Backpropagated gradients of a small network against central finite
//! differences of the batch loss.
//!
//! ```bash
//! cargo run --release --example gradient_check
//! ```

use artefact_net::nn::loss::bce_loss;
use artefact_net::nn::{LayerSpec, Mode, ModelConfig, Network};
use artefact_net::Tensor;

const H: f64 = 1e-6;

fn loss(net: &Network, x: &Tensor, labels: &[f64]) -> f64 {
    let out = net.forward(x, Mode::Eval).unwrap();
    let n = labels.len() as f64;
    out.data().iter().zip(labels).map(|(&p, &y)| bce_loss(p, y).unwrap().0).sum::<f64>() / n
}

fn main() -> artefact_net::Result<()> {
    let config = ModelConfig {
        name: "check".into(),
        input_shape: [1, 10, 10],
        layers: vec![
            LayerSpec::Conv { filters: 3, kernel: 3, stride: 1 },
            LayerSpec::Relu,
            LayerSpec::MaxPool { window: 2 },
            LayerSpec::Flatten,
            LayerSpec::Dense { units: 6 },
            LayerSpec::Relu,
            LayerSpec::Dense { units: 1 },
            LayerSpec::Sigmoid,
        ],
        expected_params: None,
    };
    let net = Network::init(config, 3)?;
    let x = Tensor::from_fn(vec![3, 1, 10, 10], |i| ((i * 37 % 101) as f64) / 101.0);
    let labels = [1.0, 0.0, 1.0];

    let trace = net.forward_trace(&x, Mode::Eval, net.config().layers.len())?;
    let n = labels.len() as f64;
    let grad_out = Tensor::from_fn(vec![3, 1], |i| bce_loss(trace.output.data()[i], labels[i]).unwrap().1 / n);
    let (grads, _) = net.backward(&trace, &grad_out, false)?;

    for (k, g) in grads.iter().enumerate() {
        let mut worst = 0.0f64;
        for i in 0..g.len() {
            let mut probe = net.clone();
            probe.params_mut()[k].data_mut()[i] += H;
            let up = loss(&probe, &x, &labels);
            probe.params_mut()[k].data_mut()[i] -= 2.0 * H;
            let down = loss(&probe, &x, &labels);
            let numeric = (up - down) / (2.0 * H);
            let a = g.data()[i];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-7));
        }
        println!("param {k} {:?}: max relative error {worst:.2e}", g.shape());
    }
    Ok(())
}
