//! Renders a few synthetic frames and builds a balanced cutout dataset.
//!
//! ```bash
//! cargo run --release --example synth_dataset -- /tmp/synth
//! ```

use std::path::PathBuf;

use artefact_net::data::{Label, Split};
use artefact_net::synth::{ground_truth_snr, make_dataset, DatasetConfig};

fn main() -> artefact_net::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("artefact-net-synth"));
    let cfg = DatasetConfig { n_frames: 4, ..Default::default() };
    let ds = make_dataset(&cfg, &out)?;

    let count = |label, split| ds.manifest.split(split).filter(|e| e.label == label).count();
    for split in [Split::Train, Split::Val] {
        println!("{split:?}: {} stars, {} artefacts", count(Label::Star, split), count(Label::Artefact, split));
    }
    for label in [Label::Star, Label::Artefact] {
        let snrs: Vec<f64> = ds.entries.iter().filter(|e| e.truth.label == label).map(|e| ground_truth_snr(&e.truth, &cfg.scene)).collect();
        let (lo, hi) = snrs.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        println!("{label:?} SNR range {lo:.0} .. {hi:.0}");
    }
    println!("dataset written to {}", out.display());
    Ok(())
}
