//! Classifies every catalogued source of an unseen synthetic frame and
//! compares the report with ground truth.
//!
//! ```bash
//! cargo run --release --example classify_frame [-- model.ckpt]
//! ```

#[path = "shared/quick.rs"]
mod quick;

use artefact_net::pipeline::{classify_frame, report_csv, summarize, Status};
use artefact_net::synth::{render_frame, DatasetConfig};
use artefact_net::data::Label;

fn main() -> artefact_net::Result<()> {
    let dir = tempfile_dir("artefact-net-classify");
    let network = quick::model(&dir)?;
    let mut cfg = DatasetConfig::default();
    cfg.scene.seed = quick::SEED;
    let scene = render_frame(&cfg.scene, 10_000)?;
    let sources: Vec<_> = scene.truth.iter().map(|t| t.record()).collect();
    let rows = classify_frame(&network, &scene.frame, &sources, &cfg.mask(), 0.5)?;

    let report = report_csv(&rows);
    print!("{}", report.lines().take(8).map(|l| format!("{l}\n")).collect::<String>());
    println!("...\n{}", summarize(&rows));
    let (mut agree, mut scored) = (0, 0);
    for (row, truth) in rows.iter().zip(&scene.truth) {
        let label = match row.status {
            Status::Star => Label::Star,
            Status::Artefact => Label::Artefact,
            Status::Skipped(_) => continue,
        };
        scored += 1;
        agree += usize::from(label == truth.label);
    }
    println!("{agree}/{scored} classified sources match ground truth");
    Ok(())
}

fn tempfile_dir(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}
