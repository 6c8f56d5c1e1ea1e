use super::catalog::SourceRecord;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const CUTOUT_SIZE: usize = 64;

/// An 8-bit `64 × 64` postage stamp, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cutout {
    bytes: Vec<u8>,
}

impl Cutout {
    pub fn new(bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() != CUTOUT_SIZE * CUTOUT_SIZE {
            return Err(Error::Invalid(format!(
                "cutout needs {} bytes, got {}",
                CUTOUT_SIZE * CUTOUT_SIZE,
                bytes.len()
            )));
        }
        Ok(Self { bytes })
    }

    pub fn zeros() -> Self {
        Self {
            bytes: vec![0; CUTOUT_SIZE * CUTOUT_SIZE],
        }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.bytes[row * CUTOUT_SIZE + col]
    }
}

/// `round(v)` with halves going up.
pub(crate) fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

/// Top-left pixel of the `size × size` box centred on `(round(x), round(y))`.
/// The centre pixel sits at offset `size / 2` within the box.
pub fn cutout_origin(x: f64, y: f64, size: usize) -> (i64, i64) {
    let half = (size / 2) as i64;
    (round_half_up(x) - half, round_half_up(y) - half)
}

/// Linear min-max stretch to `0..=255` with round-half-up quantization.
/// A constant window maps to all zeros.
pub fn stretch_to_u8(values: &[f64]) -> Vec<u8> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return vec![0; values.len()];
    }
    let range = hi - lo;
    values
        .iter()
        .map(|&v| ((v - lo) * 255.0 / range + 0.5).floor().clamp(0.0, 255.0) as u8)
        .collect()
}

/// Cuts the 64×64 window centred on `(x, y)` out of a `[height, width]`
/// frame and stretches it to 8 bits.
pub fn extract_cutout(frame: &Tensor, x: f64, y: f64) -> Result<Cutout> {
    frame.expect_rank("extract_cutout", 2)?;
    let (h, w) = (frame.shape()[0] as i64, frame.shape()[1] as i64);
    let n = CUTOUT_SIZE as i64;
    let (ox, oy) = cutout_origin(x, y, CUTOUT_SIZE);
    if ox < 0 || oy < 0 || ox + n > w || oy + n > h {
        return Err(Error::Invalid(format!(
            "cutout box at ({ox}, {oy}) does not fit in {w}x{h} frame"
        )));
    }
    let mut window = Vec::with_capacity(CUTOUT_SIZE * CUTOUT_SIZE);
    for row in oy..oy + n {
        let start = (row * w + ox) as usize;
        window.extend_from_slice(&frame.data()[start..start + CUTOUT_SIZE]);
    }
    if window.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("frame window at ({ox}, {oy})")));
    }
    Cutout::new(stretch_to_u8(&window))
}

/// Divides each byte by 255, giving a `[1, 64, 64]` tensor in `[0, 1]`.
pub fn normalize(cutout: &Cutout) -> Tensor {
    let data = cutout.as_bytes().iter().map(|&b| f64::from(b) / 255.0).collect();
    Tensor::new(vec![1, CUTOUT_SIZE, CUTOUT_SIZE], data).expect("cutout size is fixed")
}

/// Picks up to `per_bin` of the brightest sources from each magnitude bin.
///
/// Bins are `bin_width` wide and anchored at `floor(min magnitude)`; only
/// the first `max_bins` bins (the brightest `max_bins · bin_width`
/// magnitudes) contribute. Output runs from bright to faint.
pub fn select_stars_by_magnitude(
    sources: &[SourceRecord],
    bin_width: f64,
    per_bin: usize,
    max_bins: usize,
) -> Vec<SourceRecord> {
    if sources.is_empty() || per_bin == 0 || max_bins == 0 || !(bin_width > 0.0) {
        return Vec::new();
    }
    let anchor = sources.iter().map(|s| s.mag).fold(f64::INFINITY, f64::min).floor();
    let mut bins: Vec<Vec<SourceRecord>> = vec![Vec::new(); max_bins];
    for s in sources {
        let bin = ((s.mag - anchor) / bin_width).floor();
        if bin >= 0.0 && (bin as usize) < max_bins {
            bins[bin as usize].push(*s);
        }
    }
    let mut picked = Vec::new();
    for mut bin in bins {
        bin.sort_by(|a, b| a.mag.total_cmp(&b.mag).then(a.id.cmp(&b.id)));
        picked.extend(bin.into_iter().take(per_bin));
    }
    picked
}
