use rand_distr::{Distribution, StandardNormal};

use super::model::ParamShapes;
use super::rng::Rng;
use crate::tensor::Tensor;

/// He-normal weights, `N(0, 2/fan_in)`, and zero biases.
pub fn init_weights(shapes: &ParamShapes, rng: &mut Rng) -> (Tensor, Tensor) {
    let fan_in: usize = shapes.weights[1..].iter().product();
    let std = (2.0 / fan_in.max(1) as f64).sqrt();
    let weights = Tensor::from_fn(shapes.weights.clone(), |_| {
        let z: f64 = StandardNormal.sample(rng);
        z * std
    });
    (weights, Tensor::zeros(shapes.bias.clone()))
}
