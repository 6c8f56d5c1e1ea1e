//! Short training run shared by the classify and saliency examples.

use std::path::Path;

use artefact_net::data::{AugmentPolicy, Split};
use artefact_net::nn::{load_checkpoint, Network, TrainConfig, Trainer};
use artefact_net::synth::{make_dataset, DatasetConfig, SynthDataset};
use artefact_net::zoo;

pub const SEED: u64 = 1;

pub fn dataset(dir: &Path, frames: usize) -> artefact_net::Result<SynthDataset> {
    let mut cfg = DatasetConfig { n_frames: frames, write_frames: false, ..Default::default() };
    cfg.scene.seed = SEED;
    make_dataset(&cfg, dir)
}

/// Loads the checkpoint given as the first argument, or trains the reference
/// model for a few epochs on a fresh synthetic set.
pub fn model(dir: &Path) -> artefact_net::Result<Network> {
    if let Some(path) = std::env::args().nth(1) {
        return load_checkpoint(Path::new(&path))?.network();
    }
    let ds = dataset(dir, 60)?;
    let train = ds.manifest.load_samples(dir, Split::Train)?;
    let val = ds.manifest.load_samples(dir, Split::Val)?;
    let mut trainer = Trainer::new(Network::init(zoo::build_reference_model(), SEED)?, TrainConfig { seed: SEED, ..Default::default() })?;
    for _ in 0..3 {
        let s = trainer.run_epoch(&train, &val, &AugmentPolicy::standard())?;
        eprintln!("epoch {} train_loss {:.4} val_acc {:.4}", s.epoch, s.train_loss, s.val_acc);
    }
    Ok(trainer.into_network())
}
