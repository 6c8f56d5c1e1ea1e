//! Catalog to cutouts: mask check, 64x64 extraction with min-max stretch,
//! then a few augmented draws of one cutout written as PGM.
//!
//! ```bash
//! cargo run --release --example data_pipeline -- /tmp/cutouts
//! ```

use std::path::PathBuf;

use artefact_net::data::augment::{augment, augment_rng};
use artefact_net::data::{extract_cutout, normalize, write_cutout, AugmentPolicy, Cutout, CUTOUT_SIZE};
use artefact_net::synth::{render_frame, DatasetConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("artefact-net-cutouts"));
    std::fs::create_dir_all(&out)?;
    let cfg = DatasetConfig::default();
    let mask = cfg.mask();
    let scene = render_frame(&cfg.scene, 0)?;

    let mut kept = Vec::new();
    for obj in &scene.truth {
        match mask.check(&obj.record(), cfg.scene.width, cfg.scene.height, CUTOUT_SIZE) {
            Some(reason) => println!("source {:>3} {:?}: {reason}", obj.id, obj.label),
            None => kept.push(obj),
        }
    }
    println!("{} of {} sources usable", kept.len(), scene.truth.len());

    let artefact = kept.iter().find(|o| o.label == artefact_net::data::Label::Artefact).expect("an unmasked artefact");
    let cutout = extract_cutout(&scene.frame, artefact.x, artefact.y)?;
    write_cutout(&cutout, &out.join("original.pgm"))?;
    let pixels = normalize(&cutout);
    for i in 0..4 {
        let img = augment(&pixels, &mut augment_rng(0, 0, i), &AugmentPolicy::standard());
        let bytes = img.data().iter().map(|v| (v * 255.0).round() as u8).collect();
        write_cutout(&Cutout::new(bytes)?, &out.join(format!("augmented_{i}.pgm")))?;
    }
    println!("cutouts written to {}", out.display());
    Ok(())
}
