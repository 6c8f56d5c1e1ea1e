//! Instrument mask: rectangular frame regions no cutout may touch.

use std::fmt;

use super::catalog::SourceRecord;
use super::cutout::cutout_origin;
use crate::error::{Error, Result};

/// Inclusive pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

impl Rect {
    pub fn contains(&self, x: i64, y: i64) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x0 <= other.x1 && other.x0 <= self.x1 && self.y0 <= other.y1 && other.y0 <= self.y1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    /// The cutout box would run past the frame edge.
    Edge,
    /// The cutout box overlaps an excluded region.
    Masked,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::Edge => "edge",
            RejectReason::Masked => "masked",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaskSpec {
    pub regions: Vec<Rect>,
}

impl MaskSpec {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Central horizontal and vertical bands of half-width `band` plus
    /// `border`-pixel margins along all four edges.
    pub fn cross_and_border(width: usize, height: usize, band: usize, border: usize) -> Self {
        let (w, h) = (width as i64, height as i64);
        let (band, border) = (band as i64, border as i64);
        let (cx, cy) = (w / 2, h / 2);
        let mut regions = vec![
            Rect { x0: 0, y0: cy - band, x1: w - 1, y1: cy + band - 1 },
            Rect { x0: cx - band, y0: 0, x1: cx + band - 1, y1: h - 1 },
        ];
        if border > 0 {
            regions.extend([
                Rect { x0: 0, y0: 0, x1: w - 1, y1: border - 1 },
                Rect { x0: 0, y0: h - border, x1: w - 1, y1: h - 1 },
                Rect { x0: 0, y0: 0, x1: border - 1, y1: h - 1 },
                Rect { x0: w - border, y0: 0, x1: w - 1, y1: h - 1 },
            ]);
        }
        Self { regions }
    }

    /// Parses `rect x0 y0 x1 y1` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut regions = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Format(format!("mask line {}: expected `rect x0 y0 x1 y1`, got `{line}`", i + 1));
            if toks.len() != 5 || toks[0] != "rect" {
                return Err(bad());
            }
            let v: Vec<i64> = toks[1..]
                .iter()
                .map(|t| t.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            if v[0] > v[2] || v[1] > v[3] {
                return Err(Error::Format(format!("mask line {}: empty rectangle", i + 1)));
            }
            regions.push(Rect { x0: v[0], y0: v[1], x1: v[2], y1: v[3] });
        }
        Ok(Self { regions })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        self.regions
            .iter()
            .map(|r| format!("rect {} {} {} {}\n", r.x0, r.y0, r.x1, r.y1))
            .collect()
    }

    /// Checks every region lies inside a `width × height` frame.
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        for r in &self.regions {
            if r.x0 < 0 || r.y0 < 0 || r.x1 >= width as i64 || r.y1 >= height as i64 {
                return Err(Error::Invalid(format!(
                    "mask region {r:?} outside {width}x{height} frame"
                )));
            }
        }
        Ok(())
    }

    /// Why a source's cutout box is unusable, if it is.
    pub fn check(&self, source: &SourceRecord, width: usize, height: usize, size: usize) -> Option<RejectReason> {
        let (ox, oy) = cutout_origin(source.x, source.y, size);
        let bx = Rect { x0: ox, y0: oy, x1: ox + size as i64 - 1, y1: oy + size as i64 - 1 };
        if bx.x0 < 0 || bx.y0 < 0 || bx.x1 >= width as i64 || bx.y1 >= height as i64 {
            return Some(RejectReason::Edge);
        }
        self.regions
            .iter()
            .any(|r| r.intersects(&bx))
            .then_some(RejectReason::Masked)
    }
}

/// Splits sources into those whose `size × size` cutout is usable and those
/// that touch the frame edge or a masked region.
pub fn apply_mask(
    sources: &[SourceRecord],
    mask: &MaskSpec,
    width: usize,
    height: usize,
    size: usize,
) -> (Vec<SourceRecord>, Vec<(SourceRecord, RejectReason)>) {
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for s in sources {
        match mask.check(s, width, height, size) {
            None => kept.push(*s),
            Some(reason) => rejected.push((*s, reason)),
        }
    }
    (kept, rejected)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src(x: f64, y: f64) -> SourceRecord {
        SourceRecord { id: 1, x, y, mag: 14.0, flags: 0 }
    }

    #[test]
    fn empty_mask_keeps_centred_source() {
        let (kept, rej) = apply_mask(&[src(256.0, 256.0)], &MaskSpec::empty(), 512, 512, 64);
        assert_eq!(kept.len(), 1);
        assert!(rej.is_empty());
    }

    #[test]
    fn near_edge_is_rejected() {
        let (kept, rej) = apply_mask(&[src(10.0, 256.0)], &MaskSpec::empty(), 512, 512, 64);
        assert!(kept.is_empty());
        assert_eq!(rej[0].1, RejectReason::Edge);
    }

    #[test]
    fn cross_band_rejects() {
        let mask = MaskSpec::cross_and_border(512, 512, 8, 16);
        mask.validate(512, 512).unwrap();
        assert_eq!(mask.check(&src(256.0, 100.0), 512, 512, 64), Some(RejectReason::Masked));
        assert_eq!(mask.check(&src(120.0, 120.0), 512, 512, 64), None);
    }

    #[test]
    fn text_round_trip_and_errors() {
        let mask = MaskSpec::cross_and_border(300, 200, 5, 10);
        assert_eq!(MaskSpec::parse(&mask.to_text()).unwrap(), mask);
        assert!(MaskSpec::parse("rect 1 2 3").is_err());
        assert!(MaskSpec::parse("rect 5 0 1 1").is_err());
        assert!(MaskSpec::parse("# only a comment\n").unwrap().regions.is_empty());
        let outside = MaskSpec::parse("rect 0 0 400 10").unwrap();
        assert!(outside.validate(300, 200).is_err());
    }
}
