//! Declarative layer stacks and their text form.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::ConvSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    /// Square-kernel valid convolution.
    Conv { filters: usize, kernel: usize, stride: usize },
    MaxPool { window: usize },
    Relu,
    Dense { units: usize },
    Dropout { p: f64 },
    Flatten,
    Sigmoid,
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::MaxPool { .. } => "maxpool",
            LayerSpec::Relu => "relu",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Sigmoid => "sigmoid",
        }
    }

    pub fn has_params(&self) -> bool {
        matches!(self, LayerSpec::Conv { .. } | LayerSpec::Dense { .. })
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("{}: {what}", self.kind())));
        match *self {
            LayerSpec::Conv { filters, kernel, stride } if filters == 0 || kernel == 0 || stride == 0 => {
                bad("filters, kernel and stride must be positive")
            }
            LayerSpec::MaxPool { window: 0 } => bad("window must be positive"),
            LayerSpec::Dense { units: 0 } => bad("units must be positive"),
            LayerSpec::Dropout { p } if !(0.0..1.0).contains(&p) => bad("p must lie in [0, 1)"),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Conv { filters, kernel, stride } => {
                write!(f, "conv filters={filters} kernel={kernel} stride={stride}")
            }
            LayerSpec::MaxPool { window } => write!(f, "maxpool window={window}"),
            LayerSpec::Dense { units } => write!(f, "dense units={units}"),
            LayerSpec::Dropout { p } => write!(f, "dropout p={p}"),
            other => f.write_str(other.kind()),
        }
    }
}

impl FromStr for LayerSpec {
    type Err = Error;

    /// Parses `kind key=value ...`, e.g. `conv filters=32 kernel=3`.
    fn from_str(s: &str) -> Result<Self> {
        let mut tokens = s.split_whitespace();
        let kind = tokens
            .next()
            .ok_or_else(|| Error::Config("empty layer description".into()))?;
        let mut args = Vec::new();
        for tok in tokens {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("layer argument `{tok}` is not key=value")))?;
            args.push((k, v));
        }
        let get = |key: &str| args.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let int = |key: &str, default: Option<usize>| -> Result<usize> {
            match get(key) {
                Some(v) => v
                    .parse()
                    .map_err(|_| Error::Config(format!("{kind}: `{key}` must be an integer, got `{v}`"))),
                None => default.ok_or_else(|| Error::Config(format!("{kind}: missing `{key}`"))),
            }
        };
        let known: &[&str] = match kind {
            "conv" => &["filters", "kernel", "stride"],
            "maxpool" => &["window"],
            "dense" => &["units"],
            "dropout" => &["p"],
            _ => &[],
        };
        if let Some((k, _)) = args.iter().find(|(k, _)| !known.contains(k)) {
            return Err(Error::Config(format!("{kind}: unknown argument `{k}`")));
        }
        let spec = match kind {
            "conv" => LayerSpec::Conv {
                filters: int("filters", None)?,
                kernel: int("kernel", Some(3))?,
                stride: int("stride", Some(1))?,
            },
            "maxpool" => LayerSpec::MaxPool {
                window: int("window", Some(2))?,
            },
            "relu" => LayerSpec::Relu,
            "dense" => LayerSpec::Dense {
                units: int("units", None)?,
            },
            "dropout" => {
                let p = get("p").ok_or_else(|| Error::Config("dropout: missing `p`".into()))?;
                LayerSpec::Dropout {
                    p: p.parse()
                        .map_err(|_| Error::Config(format!("dropout: bad probability `{p}`")))?,
                }
            }
            "flatten" => LayerSpec::Flatten,
            "sigmoid" => LayerSpec::Sigmoid,
            other => return Err(Error::Config(format!("unknown layer kind `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// A named layer stack applied to inputs of shape `[channels, height, width]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub name: String,
    pub input_shape: [usize; 3],
    pub layers: Vec<LayerSpec>,
    pub expected_params: Option<usize>,
}

/// Parameter tensor shapes for one trainable layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamShapes {
    pub weights: Vec<usize>,
    pub bias: Vec<usize>,
}

impl ModelConfig {
    /// Per-sample activation shape after each layer, checking that every
    /// layer accepts what the previous one produces.
    pub fn shapes(&self) -> Result<Vec<Vec<usize>>> {
        let mut cur = self.input_shape.to_vec();
        let mut out = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            layer.validate()?;
            let fail = |msg: String| Err(Error::Config(format!("layer {i} ({}): {msg}", layer.kind())));
            cur = match *layer {
                LayerSpec::Conv { filters, kernel, stride } => {
                    if cur.len() != 3 {
                        return fail(format!("needs a [C,H,W] input, got {cur:?}"));
                    }
                    let spec = conv_spec(cur[0], filters, kernel, stride);
                    match spec.output_hw(cur[1], cur[2]) {
                        Some((h, w)) => vec![filters, h, w],
                        None => return fail(format!("input {cur:?} smaller than kernel")),
                    }
                }
                LayerSpec::MaxPool { window } => {
                    if cur.len() != 3 || cur[1] < window || cur[2] < window {
                        return fail(format!("cannot pool {cur:?} with window {window}"));
                    }
                    vec![cur[0], cur[1] / window, cur[2] / window]
                }
                LayerSpec::Flatten => vec![cur.iter().product()],
                LayerSpec::Dense { units } => {
                    if cur.len() != 1 {
                        return fail(format!("needs a flat input, got {cur:?}"));
                    }
                    vec![units]
                }
                LayerSpec::Relu | LayerSpec::Dropout { .. } | LayerSpec::Sigmoid => cur,
            };
            out.push(cur.clone());
        }
        Ok(out)
    }

    pub fn output_shape(&self) -> Result<Vec<usize>> {
        Ok(self
            .shapes()?
            .pop()
            .unwrap_or_else(|| self.input_shape.to_vec()))
    }

    /// Weight and bias shapes for each layer, `None` for parameter-free layers.
    pub fn param_shapes(&self) -> Result<Vec<Option<ParamShapes>>> {
        let shapes = self.shapes()?;
        let mut prev = self.input_shape.to_vec();
        let mut out = Vec::with_capacity(self.layers.len());
        for (layer, shape) in self.layers.iter().zip(shapes) {
            out.push(match *layer {
                LayerSpec::Conv { filters, kernel, .. } => Some(ParamShapes {
                    weights: vec![filters, prev[0], kernel, kernel],
                    bias: vec![filters],
                }),
                LayerSpec::Dense { units } => Some(ParamShapes {
                    weights: vec![units, prev[0]],
                    bias: vec![units],
                }),
                _ => None,
            });
            prev = shape;
        }
        Ok(out)
    }

    /// Serializes as `model.*` key=value lines.
    pub fn to_text(&self) -> String {
        let [c, h, w] = self.input_shape;
        let mut s = format!("model.name={}\nmodel.input={c}x{h}x{w}\n", self.name);
        if let Some(n) = self.expected_params {
            s.push_str(&format!("model.expected_params={n}\n"));
        }
        for layer in &self.layers {
            s.push_str(&format!("model.layer={layer}\n"));
        }
        s
    }
}

impl ModelConfig {
    /// Reads an explicit `model.*` layer list (the form written by
    /// [`ModelConfig::to_text`]).
    pub fn from_kv(kv: &crate::config::KeyValues) -> Result<Self> {
        let layers = kv
            .get_all("model.layer")
            .into_iter()
            .map(str::parse)
            .collect::<Result<Vec<LayerSpec>>>()?;
        if layers.is_empty() {
            return Err(Error::Config("model: no `model.layer` entries".into()));
        }
        let cfg = Self {
            name: kv.get_str("model.name")?.unwrap_or("custom").to_string(),
            input_shape: parse_input_shape(kv.get_str("model.input")?.unwrap_or("1x64x64"))?,
            layers,
            expected_params: kv.get("model.expected_params")?,
        };
        cfg.shapes()?;
        Ok(cfg)
    }
}

pub(crate) fn conv_spec(in_channels: usize, filters: usize, kernel: usize, stride: usize) -> ConvSpec {
    ConvSpec {
        in_channels,
        out_channels: filters,
        kernel_h: kernel,
        kernel_w: kernel,
        stride,
        padding: crate::tensor::Padding::Valid,
    }
}

pub fn parse_input_shape(s: &str) -> Result<[usize; 3]> {
    let dims: Vec<usize> = s
        .split('x')
        .map(|d| d.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("input shape `{s}` is not CxHxW")))?;
    match dims.as_slice() {
        &[c, h, w] if c > 0 && h > 0 && w > 0 => Ok([c, h, w]),
        _ => Err(Error::Config(format!("input shape `{s}` is not CxHxW"))),
    }
}
