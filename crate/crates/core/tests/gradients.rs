mod common;

use artefact_net::tensor::{conv2d_forward, ConvSpec, Padding};
use common::gradcheck;
use rand::Rng;

const LAYER_TOL: f64 = 1e-6;
const NETWORK_TOL: f64 = 1e-5;

#[test]
fn conv_matches_naive_oracle_on_random_shapes() {
    let mut r = common::rng(11);
    for _ in 0..100 {
        let ci = r.random_range(1..5);
        let co = r.random_range(1..5);
        let (kh, kw) = (r.random_range(1..4), r.random_range(1..4));
        let stride = r.random_range(1..3);
        let (h, w) = (r.random_range(kh..12), r.random_range(kw..12));
        let spec = ConvSpec { in_channels: ci, out_channels: co, kernel_h: kh, kernel_w: kw, stride, padding: Padding::Valid };
        let x = common::random_tensor(&mut r, vec![ci, h, w], 1.0);
        let wt = common::random_tensor(&mut r, vec![co, ci, kh, kw], 1.0);
        let b = common::random_tensor(&mut r, vec![co], 1.0);
        let fast = conv2d_forward(&x, &wt, &b, &spec).unwrap();
        let slow = common::naive_conv(&x, &wt, &b, stride);
        assert_eq!(fast.shape(), slow.shape());
        for (a, e) in fast.data().iter().zip(slow.data()) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e}");
        }
    }
}

#[test]
fn layer_gradients() {
    for seed in 0..5 {
        for (name, err) in [
            ("conv", gradcheck::conv(seed)),
            ("dense", gradcheck::dense(seed)),
            ("maxpool", gradcheck::maxpool(seed)),
            ("relu", gradcheck::relu_layer(seed)),
            ("sigmoid", gradcheck::sigmoid_layer(seed)),
            ("dropout", gradcheck::dropout_layer(seed)),
            ("bce", gradcheck::bce(seed)),
        ] {
            assert!(err < LAYER_TOL, "{name} seed {seed}: {err:e}");
        }
    }
}

#[test]
fn network_gradient() {
    for seed in 0..3 {
        let err = gradcheck::end_to_end(seed);
        assert!(err < NETWORK_TOL, "seed {seed}: {err:e}");
    }
}
