//! Builders for the 2-, 3- and 4-convolution classifiers and a parameter
//! counter.
//!
//! Every model follows the same pattern on a single-channel 64×64 input:
//! `[conv 3×3 → relu → maxpool 2]` per stage with doubling filter counts
//! from 32, then dropout 0.4, flatten, a 512-unit ReLU dense layer and a
//! single sigmoid output. Convolutions use valid padding, so the 3-stage
//! spatial chain is 64→62→31→29→14→12→6 and the flattened size 6·6·128.

use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::nn::model::{LayerSpec, ModelConfig};

pub const INPUT_SHAPE: [usize; 3] = [1, 64, 64];
pub const DENSE_UNITS: usize = 512;
pub const DROPOUT: f64 = 0.4;
/// Trainable parameters of the 3-stage model.
pub const REFERENCE_PARAMETER_COUNT: usize = 2_452_993;

fn stages(name: &str, filters: &[usize], expected: Option<usize>) -> ModelConfig {
    let mut layers = Vec::new();
    for &f in filters {
        layers.push(LayerSpec::Conv { filters: f, kernel: 3, stride: 1 });
        layers.push(LayerSpec::Relu);
        layers.push(LayerSpec::MaxPool { window: 2 });
    }
    layers.extend([
        LayerSpec::Dropout { p: DROPOUT },
        LayerSpec::Flatten,
        LayerSpec::Dense { units: DENSE_UNITS },
        LayerSpec::Relu,
        LayerSpec::Dense { units: 1 },
        LayerSpec::Sigmoid,
    ]);
    ModelConfig {
        name: name.into(),
        input_shape: INPUT_SHAPE,
        layers,
        expected_params: expected,
    }
}

/// Three convolution stages with 32, 64 and 128 filters.
pub fn build_reference_model() -> ModelConfig {
    stages("conv3", &[32, 64, 128], Some(REFERENCE_PARAMETER_COUNT))
}

/// The shallower (2 stages: 32, 64 filters) or deeper (4 stages: 32, 64,
/// 128, 256 filters) variant.
pub fn build_variant(layers: usize) -> Result<ModelConfig> {
    match layers {
        2 => Ok(stages("conv2", &[32, 64], None)),
        3 => Ok(build_reference_model()),
        4 => Ok(stages("conv4", &[32, 64, 128, 256], None)),
        other => Err(Error::Config(format!(
            "unsupported depth {other}: choose 2, 3 or 4 convolution stages"
        ))),
    }
}

/// Trainable weights and biases of every conv and dense layer.
pub fn count_parameters(config: &ModelConfig) -> Result<usize> {
    Ok(config
        .param_shapes()?
        .into_iter()
        .flatten()
        .map(|p| p.weights.iter().product::<usize>() + p.bias.iter().product::<usize>())
        .sum())
}

/// Model from configuration: `model.preset = conv2|conv3|conv4` or an explicit
/// `model.layer` list. Defaults to the 3-stage model.
pub fn model_from_kv(kv: &KeyValues) -> Result<ModelConfig> {
    let preset = kv.get_str("model.preset")?;
    let explicit = !kv.get_all("model.layer").is_empty();
    let cfg = match (preset, explicit) {
        (Some(_), true) => {
            return Err(Error::Config("give either model.preset or model.layer entries, not both".into()))
        }
        (None, true) => ModelConfig::from_kv(kv)?,
        (Some("conv2"), false) => build_variant(2)?,
        (Some("conv3") | None, false) => build_reference_model(),
        (Some("conv4"), false) => build_variant(4)?,
        (Some(other), false) => return Err(Error::Config(format!("unknown model.preset `{other}`"))),
    };
    if let Some(want) = cfg.expected_params {
        let got = count_parameters(&cfg)?;
        if got != want {
            return Err(Error::Config(format!(
                "model `{}` has {got} parameters, expected {want}",
                cfg.name
            )));
        }
    }
    Ok(cfg)
}
