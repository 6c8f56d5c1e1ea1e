use std::fmt;
use std::str::FromStr;

use super::cutout::{Cutout, CUTOUT_SIZE};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Artefact,
    Star,
}

impl Label {
    /// Training target: star = 1, artefact = 0.
    pub fn target(self) -> f64 {
        match self {
            Label::Star => 1.0,
            Label::Artefact => 0.0,
        }
    }

    pub fn from_target(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Label::Star),
            0 => Ok(Label::Artefact),
            other => Err(Error::Invalid(format!("label must be 0 or 1, got {other}"))),
        }
    }

    pub fn other(self) -> Self {
        match self {
            Label::Star => Label::Artefact,
            Label::Artefact => Label::Star,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Star => "star",
            Label::Artefact => "artefact",
        })
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "star" | "1" => Ok(Label::Star),
            "artefact" | "artifact" | "0" => Ok(Label::Artefact),
            other => Err(Error::Invalid(format!("unknown class `{other}`"))),
        }
    }
}

/// A labelled, normalized image plus where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// `[channels, height, width]`, values in `[0, 1]`.
    pub pixels: Tensor,
    pub label: Label,
    pub source_id: u64,
    pub frame_id: u64,
}

impl Sample {
    /// A standard `1×64×64` cutout sample.
    pub fn new(pixels: Tensor, label: Label, source_id: u64, frame_id: u64) -> Result<Self> {
        if pixels.shape() != [1, CUTOUT_SIZE, CUTOUT_SIZE] {
            return Err(Error::shape(
                "Sample::new",
                format!("expected [1, {CUTOUT_SIZE}, {CUTOUT_SIZE}], got {:?}", pixels.shape()),
            ));
        }
        Self::from_tensor(pixels, label, source_id, frame_id)
    }

    /// Any `[C, H, W]` image; used by small test models.
    pub fn from_tensor(pixels: Tensor, label: Label, source_id: u64, frame_id: u64) -> Result<Self> {
        if pixels.ndim() != 3 {
            return Err(Error::shape("Sample", format!("expected [C,H,W], got {:?}", pixels.shape())));
        }
        if let Some(v) = pixels.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Invalid(format!("sample pixel {v} outside [0, 1]")));
        }
        Ok(Self {
            pixels,
            label,
            source_id,
            frame_id,
        })
    }

    pub fn from_cutout(cutout: &Cutout, label: Label, source_id: u64, frame_id: u64) -> Self {
        Self {
            pixels: super::cutout::normalize(cutout),
            label,
            source_id,
            frame_id,
        }
    }
}
