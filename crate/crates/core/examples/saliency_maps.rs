//! Saliency maps for validation artefacts, written as PGM next to their
//! cutouts, with the share of saliency inside each artefact's 3-sigma
//! footprint.
//!
//! ```bash
//! cargo run --release --example saliency_maps [-- model.ckpt]
//! ```

#[path = "shared/quick.rs"]
mod quick;

use artefact_net::data::{write_cutout, Label, Split};
use artefact_net::saliency::{saliency_map, saliency_mass_fraction, write_saliency_pgm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("artefact-net-saliency");
    let _ = std::fs::remove_dir_all(&dir);
    let network = quick::model(&dir.join("train"))?;
    let ds = quick::dataset(&dir.join("data"), 6)?;
    let samples = ds.manifest.load_samples(&dir.join("data"), Split::Val)?;
    let out = dir.join("maps");
    std::fs::create_dir_all(&out)?;

    for s in samples.iter().filter(|s| s.label == Label::Artefact).take(8) {
        let entry = ds.entries.iter().find(|e| e.frame == s.frame_id && e.truth.id == s.source_id).expect("truth");
        let p = network.predict(&s.pixels)?;
        let map = saliency_map(&network, &s.pixels, Label::Artefact)?;
        let mass = saliency_mass_fraction(&map, &entry.truth.cutout_footprint())?;
        let name = format!("f{:05}_s{:06}", s.frame_id, s.source_id);
        write_saliency_pgm(&map, &out.join(format!("{name}_saliency.pgm")))?;
        write_cutout(&artefact_net::data::read_cutout(&dir.join("data").join(&entry.path))?, &out.join(format!("{name}.pgm")))?;
        println!("{name}: p_star {p:.3}, saliency inside footprint {mass:.3}");
    }
    println!("maps written to {}", out.display());
    Ok(())
}
