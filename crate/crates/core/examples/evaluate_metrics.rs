//! Confusion-matrix metrics under both positive-class conventions, and ROC
//! of a small score set.
//!
//! ```bash
//! cargo run --release --example evaluate_metrics
//! ```

use artefact_net::data::Label;
use artefact_net::metrics::{roc, ConfusionMatrix, MetricsReport};

fn main() -> artefact_net::Result<()> {
    let cm = ConfusionMatrix::from_counts(170, 5, 175, 3, Label::Star);
    for m in [cm, cm.swapped()] {
        println!(
            "positive {:?}: precision {:.4} recall {:.4} f1 {:.4} mcc {:.4} fpr {:.4} fnr {:.4}",
            m.positive,
            m.precision(),
            m.recall(),
            m.f1(),
            m.mcc(),
            m.fpr(),
            m.fnr()
        );
    }

    let scores = [0.97, 0.91, 0.88, 0.62, 0.55, 0.41, 0.30, 0.12, 0.08, 0.02];
    let labels = [
        Label::Star,
        Label::Star,
        Label::Star,
        Label::Artefact,
        Label::Star,
        Label::Artefact,
        Label::Star,
        Label::Artefact,
        Label::Artefact,
        Label::Artefact,
    ];
    let (points, auc) = roc(&scores, &labels)?;
    for p in &points {
        println!("threshold {:>6.2} fpr {:.2} tpr {:.2}", p.threshold, p.fpr, p.tpr);
    }
    println!("auc {auc:.4}\n");
    print!("{}", MetricsReport::compute(&scores, &labels, 0.5, Label::Star)?.to_text(""));
    Ok(())
}
