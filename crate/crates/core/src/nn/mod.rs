//! Layers, loss, optimizer, training loop and checkpoints.

pub mod adam;
pub mod checkpoint;
pub mod dropout;
pub mod init;
pub mod loss;
pub mod model;
pub mod network;
pub mod rng;
pub mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use dropout::{dropout_forward, DropoutMode};
pub use init::init_weights;
pub use loss::bce_loss;
pub use model::{LayerSpec, ModelConfig};
pub use network::{Mode, Network};
pub use train::{train, EpochStats, History, TrainConfig, Trainer};
