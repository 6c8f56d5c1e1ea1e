//! A sequential network over a [`ModelConfig`], with batched forward and
//! backward passes.
//!
//! Activations carry a leading batch axis: images are `[N, C, H, W]`, flat
//! features `[N, n]`. Convolution and pooling run sample by sample; dense
//! layers run as one matrix product over the batch.

use super::dropout::{dropout_backward, dropout_forward, DropoutMode};
use super::init::init_weights;
use super::model::{conv_spec, LayerSpec, ModelConfig};
use super::rng::{derived, Purpose, Rng};
use crate::error::{Error, Result};
use crate::tensor::{
    self, conv2d_forward, dense_backward_batch, dense_forward_batch, maxpool2d_backward,
    maxpool2d_forward, relu, relu_backward, sigmoid, sigmoid_backward, Tensor,
};

pub enum Mode<'a> {
    Eval,
    /// Training mode; dropout draws from the given generator.
    Train(&'a mut Rng),
}

#[derive(Debug, Clone)]
enum Cache {
    Conv { input: Tensor },
    Pool { argmax: Vec<Vec<usize>>, sample_shape: Vec<usize> },
    Relu { input: Tensor },
    Dense { input: Tensor },
    Dropout { mask: Option<Vec<f64>> },
    Flatten { shape: Vec<usize> },
    Sigmoid { output: Tensor },
}

/// Everything a forward pass saved for the backward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    caches: Vec<Cache>,
    pub output: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    config: ModelConfig,
    shapes: Vec<Vec<usize>>,
    params: Vec<Tensor>,
    /// For each layer, the index of its weight tensor in `params` (the bias
    /// follows it).
    slots: Vec<Option<usize>>,
}

impl Network {
    /// Wraps existing parameters, checking them against the config.
    pub fn new(config: ModelConfig, params: Vec<Tensor>) -> Result<Self> {
        let shapes = config.shapes()?;
        let expected = config.param_shapes()?;
        let mut slots = Vec::with_capacity(expected.len());
        let mut idx = 0;
        for ps in &expected {
            match ps {
                Some(ps) => {
                    for want in [&ps.weights, &ps.bias] {
                        let got = params.get(idx).map(|t| t.shape().to_vec());
                        if got.as_ref() != Some(want) {
                            return Err(Error::shape(
                                "Network::new",
                                format!("parameter {idx}: expected shape {want:?}, got {got:?}"),
                            ));
                        }
                        idx += 1;
                    }
                    slots.push(Some(idx - 2));
                }
                None => slots.push(None),
            }
        }
        if idx != params.len() {
            return Err(Error::shape(
                "Network::new",
                format!("expected {idx} parameter tensors, got {}", params.len()),
            ));
        }
        Ok(Self {
            config,
            shapes,
            params,
            slots,
        })
    }

    /// Fresh He-initialized network.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut rng = derived(seed, Purpose::Init, 0);
        let mut params = Vec::new();
        for ps in config.param_shapes()?.into_iter().flatten() {
            let (w, b) = init_weights(&ps, &mut rng);
            params.push(w);
            params.push(b);
        }
        Self::new(config, params)
    }

    /// All-zero parameters.
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        let mut params = Vec::new();
        for ps in config.param_shapes()?.into_iter().flatten() {
            params.push(Tensor::zeros(ps.weights));
            params.push(Tensor::zeros(ps.bias));
        }
        Self::new(config, params)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn into_params(self) -> Vec<Tensor> {
        self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn input_shape(&self) -> [usize; 3] {
        self.config.input_shape
    }

    /// Number of layers before a trailing sigmoid, i.e. where the logit is
    /// produced. Equals the layer count when there is no sigmoid head.
    pub fn logit_depth(&self) -> usize {
        match self.config.layers.last() {
            Some(LayerSpec::Sigmoid) => self.config.layers.len() - 1,
            _ => self.config.layers.len(),
        }
    }

    /// Full forward pass over a batch.
    pub fn forward(&self, batch: &Tensor, mode: Mode<'_>) -> Result<Tensor> {
        Ok(self.forward_trace(batch, mode, self.config.layers.len())?.output)
    }

    /// Single-sample probability in evaluation mode. `pixels` is `[C, H, W]`.
    pub fn predict(&self, pixels: &Tensor) -> Result<f64> {
        let mut shape = vec![1];
        shape.extend_from_slice(pixels.shape());
        let batch = Tensor::new(shape, pixels.data().to_vec())?;
        let out = self.forward(&batch, Mode::Eval)?;
        Ok(out.data()[0])
    }

    /// Runs layers `[0, depth)` and keeps what backward needs.
    pub fn forward_trace(&self, batch: &Tensor, mut mode: Mode<'_>, depth: usize) -> Result<Trace> {
        const OP: &str = "Network::forward";
        let mut want = vec![0];
        want.extend_from_slice(&self.config.input_shape);
        if batch.ndim() != 4 || batch.shape()[1..] != want[1..] {
            return Err(Error::shape(
                OP,
                format!("expected [N, {:?}] input, got {:?}", self.config.input_shape, batch.shape()),
            ));
        }
        let n = batch.shape()[0];
        let mut x = batch.clone();
        let mut caches = Vec::with_capacity(depth);
        for (i, layer) in self.config.layers.iter().take(depth).enumerate() {
            let (next, cache) = match *layer {
                LayerSpec::Conv { filters, kernel, stride } => {
                    let in_shape = &x.shape()[1..];
                    let spec = conv_spec(in_shape[0], filters, kernel, stride);
                    let (w, b) = self.layer_params(i);
                    let mut out = Vec::with_capacity(n * self.sample_len(i));
                    for s in 0..n {
                        let y = conv2d_forward(&sample(&x, s)?, w, b, &spec)?;
                        out.extend_from_slice(y.data());
                    }
                    (self.batch_tensor(i, n, out)?, Cache::Conv { input: x })
                }
                LayerSpec::MaxPool { window } => {
                    let sample_shape = x.shape()[1..].to_vec();
                    let mut out = Vec::with_capacity(n * self.sample_len(i));
                    let mut argmax = Vec::with_capacity(n);
                    for s in 0..n {
                        let p = maxpool2d_forward(&sample(&x, s)?, window)?;
                        out.extend_from_slice(p.output.data());
                        argmax.push(p.argmax);
                    }
                    (self.batch_tensor(i, n, out)?, Cache::Pool { argmax, sample_shape })
                }
                LayerSpec::Relu => (relu(&x), Cache::Relu { input: x }),
                LayerSpec::Sigmoid => {
                    let y = sigmoid(&x);
                    (y.clone(), Cache::Sigmoid { output: y })
                }
                LayerSpec::Dropout { p } => {
                    let (y, mask) = match &mut mode {
                        Mode::Eval => (x, None),
                        Mode::Train(rng) => dropout_forward(&x, p, DropoutMode::Train, rng),
                    };
                    (y, Cache::Dropout { mask })
                }
                LayerSpec::Flatten => {
                    let shape = x.shape().to_vec();
                    let flat = shape[1..].iter().product::<usize>();
                    (x.reshape(vec![n, flat])?, Cache::Flatten { shape })
                }
                LayerSpec::Dense { .. } => {
                    let (w, b) = self.layer_params(i);
                    (dense_forward_batch(&x, w, b)?, Cache::Dense { input: x })
                }
            };
            x = next;
            caches.push(cache);
        }
        Ok(Trace { caches, output: x })
    }

    /// Backpropagates `grad_out` (shaped like `trace.output`) through the
    /// traced layers. Returns parameter gradients in the layout of
    /// [`Network::params`], summed over the batch, and optionally the input
    /// gradient.
    pub fn backward(
        &self,
        trace: &Trace,
        grad_out: &Tensor,
        want_input_grad: bool,
    ) -> Result<(Vec<Tensor>, Option<Tensor>)> {
        if grad_out.shape() != trace.output.shape() {
            return Err(Error::shape(
                "Network::backward",
                format!("gradient {:?} vs output {:?}", grad_out.shape(), trace.output.shape()),
            ));
        }
        let mut grads: Vec<Tensor> = self.params.iter().map(|p| Tensor::zeros(p.shape().to_vec())).collect();
        let mut g = grad_out.clone();
        for i in (0..trace.caches.len()).rev() {
            // below the first trainable layer nothing needs a gradient
            let need_input = want_input_grad || self.slots[..i].iter().any(Option::is_some);
            g = match (&self.config.layers[i], &trace.caches[i]) {
                (&LayerSpec::Conv { filters, kernel, stride }, Cache::Conv { input }) => {
                    let n = input.shape()[0];
                    let spec = conv_spec(input.shape()[1], filters, kernel, stride);
                    let slot = self.slots[i].expect("conv layer has parameters");
                    let w = &self.params[slot];
                    let mut gin = Vec::with_capacity(if need_input { input.len() } else { 0 });
                    for s in 0..n {
                        let cg = tensor::conv::conv2d_backward_impl(
                            &sample(&g, s)?,
                            &sample(input, s)?,
                            w,
                            &spec,
                            need_input,
                        )?;
                        add_into(&mut grads[slot], &cg.weights);
                        add_into(&mut grads[slot + 1], &cg.bias);
                        if let Some(gi) = cg.input {
                            gin.extend_from_slice(gi.data());
                        }
                    }
                    if need_input {
                        Tensor::new(input.shape().to_vec(), gin)?
                    } else {
                        Tensor::zeros(vec![0])
                    }
                }
                (LayerSpec::MaxPool { .. }, Cache::Pool { argmax, sample_shape }) => {
                    let n = argmax.len();
                    let mut gin = Vec::with_capacity(n * sample_shape.iter().product::<usize>());
                    for (s, am) in argmax.iter().enumerate() {
                        let gi = maxpool2d_backward(&sample(&g, s)?, am, sample_shape)?;
                        gin.extend_from_slice(gi.data());
                    }
                    let mut shape = vec![n];
                    shape.extend_from_slice(sample_shape);
                    Tensor::new(shape, gin)?
                }
                (LayerSpec::Relu, Cache::Relu { input }) => relu_backward(&g, input)?,
                (LayerSpec::Sigmoid, Cache::Sigmoid { output }) => sigmoid_backward(&g, output)?,
                (LayerSpec::Dropout { .. }, Cache::Dropout { mask }) => dropout_backward(&g, mask.as_deref()),
                (LayerSpec::Flatten, Cache::Flatten { shape }) => g.reshape(shape.clone())?,
                (LayerSpec::Dense { .. }, Cache::Dense { input }) => {
                    let slot = self.slots[i].expect("dense layer has parameters");
                    let dg = dense_backward_batch(&g, input, &self.params[slot])?;
                    add_into(&mut grads[slot], &dg.weights);
                    add_into(&mut grads[slot + 1], &dg.bias);
                    dg.input
                }
                _ => unreachable!("cache kind always matches its layer"),
            };
        }
        Ok((grads, want_input_grad.then_some(g)))
    }

    fn layer_params(&self, layer: usize) -> (&Tensor, &Tensor) {
        let slot = self.slots[layer].expect("layer has parameters");
        (&self.params[slot], &self.params[slot + 1])
    }

    fn sample_len(&self, layer: usize) -> usize {
        self.shapes[layer].iter().product()
    }

    fn batch_tensor(&self, layer: usize, n: usize, data: Vec<f64>) -> Result<Tensor> {
        let mut shape = vec![n];
        shape.extend_from_slice(&self.shapes[layer]);
        Tensor::new(shape, data)
    }
}

/// Copy of sample `s` from a batch tensor, without the batch axis.
fn sample(batch: &Tensor, s: usize) -> Result<Tensor> {
    let shape = batch.shape()[1..].to_vec();
    let len: usize = shape.iter().product();
    Tensor::new(shape, batch.data()[s * len..(s + 1) * len].to_vec())
}

fn add_into(acc: &mut Tensor, t: &Tensor) {
    for (a, b) in acc.data_mut().iter_mut().zip(t.data()) {
        *a += b;
    }
}

/// Stacks `[C, H, W]` samples into one `[N, C, H, W]` batch.
pub fn stack(samples: &[&Tensor]) -> Result<Tensor> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Invalid("cannot stack an empty batch".into()))?;
    let mut shape = vec![samples.len()];
    shape.extend_from_slice(first.shape());
    let mut data = Vec::with_capacity(samples.len() * first.len());
    for s in samples {
        if s.shape() != first.shape() {
            return Err(Error::shape("stack", format!("{:?} vs {:?}", s.shape(), first.shape())));
        }
        data.extend_from_slice(s.data());
    }
    Tensor::new(shape, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelConfig {
        ModelConfig {
            name: "tiny".into(),
            input_shape: [1, 8, 8],
            layers: vec![
                LayerSpec::Conv { filters: 2, kernel: 3, stride: 1 },
                LayerSpec::Relu,
                LayerSpec::MaxPool { window: 2 },
                LayerSpec::Dropout { p: 0.4 },
                LayerSpec::Flatten,
                LayerSpec::Dense { units: 4 },
                LayerSpec::Relu,
                LayerSpec::Dense { units: 1 },
                LayerSpec::Sigmoid,
            ],
            expected_params: None,
        }
    }

    #[test]
    fn output_is_a_probability_per_sample() {
        let net = Network::init(tiny(), 3).unwrap();
        let x = Tensor::from_fn(vec![5, 1, 8, 8], |i| ((i * 37) % 11) as f64 / 10.0);
        let y = net.forward(&x, Mode::Eval).unwrap();
        assert_eq!(y.shape(), &[5, 1]);
        assert!(y.data().iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn rejects_wrong_parameter_shapes() {
        let net = Network::init(tiny(), 3).unwrap();
        let mut params = net.into_params();
        params[0] = Tensor::zeros(vec![2, 1, 2, 2]);
        assert!(Network::new(tiny(), params).is_err());
    }

    #[test]
    fn rejects_wrong_input_shape() {
        let net = Network::init(tiny(), 3).unwrap();
        assert!(net.forward(&Tensor::zeros(vec![1, 1, 9, 8]), Mode::Eval).is_err());
    }

    #[test]
    fn batched_forward_matches_single_samples() {
        let net = Network::init(tiny(), 8).unwrap();
        let xs: Vec<Tensor> = (0..3)
            .map(|k| Tensor::from_fn(vec![1, 8, 8], |i| ((i + 5 * k) as f64 * 0.3).sin().abs()))
            .collect();
        let refs: Vec<&Tensor> = xs.iter().collect();
        let batch = net.forward(&stack(&refs).unwrap(), Mode::Eval).unwrap();
        for (k, x) in xs.iter().enumerate() {
            let single = net.predict(x).unwrap();
            assert!((batch.data()[k] - single).abs() < 1e-14);
        }
    }
}
