//! Trains the three-stage classifier on a synthetic dataset and saves a
//! checkpoint plus per-epoch history.
//!
//! ```bash
//! cargo run --release --example train -- 160 5 /tmp/run
//! ```

use std::path::PathBuf;

use artefact_net::data::{AugmentPolicy, Split};
use artefact_net::nn::{save_checkpoint, Checkpoint, Network, TrainConfig, Trainer};
use artefact_net::synth::{make_dataset, DatasetConfig};
use artefact_net::zoo;

fn main() -> artefact_net::Result<()> {
    let mut args = std::env::args().skip(1);
    let frames: usize = args.next().map_or(40, |s| s.parse().expect("frame count"));
    let epochs: usize = args.next().map_or(3, |s| s.parse().expect("epoch count"));
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("artefact-net-train"));

    let cfg = DatasetConfig { n_frames: frames, write_frames: false, ..Default::default() };
    let ds = make_dataset(&cfg, &out.join("data"))?;
    let train = ds.manifest.load_samples(&out.join("data"), Split::Train)?;
    let val = ds.manifest.load_samples(&out.join("data"), Split::Val)?;
    println!("{} training, {} validation cutouts", train.len(), val.len());

    let tc = TrainConfig { epochs, ..Default::default() };
    let mut trainer = Trainer::new(Network::init(zoo::build_reference_model(), tc.seed)?, tc)?;
    let history = trainer.fit(&train, &val, &AugmentPolicy::standard(), epochs)?;
    print!("{}", history.to_csv());

    let path = out.join("model.ckpt");
    save_checkpoint(&Checkpoint::from_trainer(&trainer), &path)?;
    println!("checkpoint written to {}", path.display());
    Ok(())
}
