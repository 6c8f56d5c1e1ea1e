//! Frame classification: every catalogued source is either skipped (its
//! cutout touches the frame edge or the instrument mask) or cut out,
//! stretched, normalized and scored by the network.

use crate::data::{extract_cutout, normalize, MaskSpec, RejectReason, SourceRecord, CUTOUT_SIZE};
use crate::error::{Error, Result};
use crate::nn::Network;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Status {
    Star,
    Artefact,
    Skipped(RejectReason),
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Status::Star => f.write_str("star"),
            Status::Artefact => f.write_str("artefact"),
            Status::Skipped(r) => write!(f, "skipped({r})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classified {
    pub source: SourceRecord,
    /// Probability of the star class; `None` for skipped sources.
    pub p_star: Option<f64>,
    pub status: Status,
}

/// Scores one source. Sources are independent, so classifying a catalog in
/// one call or one source at a time gives the same rows.
pub fn classify_source(
    network: &Network,
    frame: &Tensor,
    source: &SourceRecord,
    mask: &MaskSpec,
    threshold: f64,
) -> Result<Classified> {
    let (h, w) = (frame.shape()[0], frame.shape()[1]);
    if let Some(reason) = mask.check(source, w, h, CUTOUT_SIZE) {
        return Ok(Classified { source: *source, p_star: None, status: Status::Skipped(reason) });
    }
    let cutout = extract_cutout(frame, source.x, source.y)?;
    let p = network.predict(&normalize(&cutout))?;
    if !p.is_finite() {
        return Err(Error::NonFinite(format!("prediction for source {}", source.id)));
    }
    let status = if p >= threshold { Status::Star } else { Status::Artefact };
    Ok(Classified { source: *source, p_star: Some(p), status })
}

/// Rows in catalog order.
pub fn classify_frame(
    network: &Network,
    frame: &Tensor,
    sources: &[SourceRecord],
    mask: &MaskSpec,
    threshold: f64,
) -> Result<Vec<Classified>> {
    if frame.ndim() != 2 {
        return Err(Error::shape("classify_frame", format!("expected [H, W] frame, got {:?}", frame.shape())));
    }
    let [c, ih, iw] = network.input_shape();
    if [c, ih, iw] != [1, CUTOUT_SIZE, CUTOUT_SIZE] {
        return Err(Error::shape(
            "classify_frame",
            format!("model expects [{c}, {ih}, {iw}] inputs, cutouts are [1, {CUTOUT_SIZE}, {CUTOUT_SIZE}]"),
        ));
    }
    sources.iter().map(|s| classify_source(network, frame, s, mask, threshold)).collect()
}

pub const REPORT_HEADER: &str = "id,x,y,mag,flags,p_star,status";

/// CSV with 1-based coordinates; `p_star` is empty for skipped rows.
pub fn report_csv(rows: &[Classified]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in rows {
        let p = r.p_star.map_or_else(String::new, |p| format!("{p:.6}"));
        out.push_str(&format!(
            "{},{},{},{},{},{p},{}\n",
            r.source.id,
            r.source.x + 1.0,
            r.source.y + 1.0,
            r.source.mag,
            r.source.flags,
            r.status
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Summary {
    pub stars: usize,
    pub artefacts: usize,
    pub masked: usize,
    pub edge: usize,
}

pub fn summarize(rows: &[Classified]) -> Summary {
    let mut s = Summary::default();
    for r in rows {
        match r.status {
            Status::Star => s.stars += 1,
            Status::Artefact => s.artefacts += 1,
            Status::Skipped(RejectReason::Masked) => s.masked += 1,
            Status::Skipped(RejectReason::Edge) => s.edge += 1,
        }
    }
    s
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} sources: {} star, {} artefact, {} skipped (masked {}, edge {})",
            self.stars + self.artefacts + self.masked + self.edge,
            self.stars,
            self.artefacts,
            self.masked + self.edge,
            self.masked,
            self.edge
        )
    }
}
