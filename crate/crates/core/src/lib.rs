pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod saliency;
pub mod synth;
pub mod tensor;
pub mod zoo;

pub use error::{Error, Result};
pub use tensor::Tensor;
