//! Minimal FITS support: a primary HDU holding one 2-D image with
//! `BITPIX` 16 or -32, optional `BZERO`/`BSCALE`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

const BLOCK: usize = 2880;
const CARD: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bitpix {
    /// 16-bit signed storage, written with `BZERO = 32768` so physical values
    /// cover `0..=65535`.
    I16,
    F32,
}

impl Bitpix {
    fn code(self) -> i64 {
        match self {
            Bitpix::I16 => 16,
            Bitpix::F32 => -32,
        }
    }

    fn bytes(self) -> usize {
        match self {
            Bitpix::I16 => 2,
            Bitpix::F32 => 4,
        }
    }
}

#[derive(Debug, Default)]
struct Header {
    simple: Option<bool>,
    bitpix: Option<i64>,
    naxis: Option<i64>,
    axes: [Option<usize>; 2],
    bzero: Option<f64>,
    bscale: Option<f64>,
}

fn card_value(card: &str) -> Option<&str> {
    if card.len() < 10 || &card[8..10] != "= " {
        return None;
    }
    let raw = &card[10..];
    let raw = match raw.trim_start().starts_with('\'') {
        true => raw,
        false => raw.split('/').next().unwrap_or(""),
    };
    Some(raw.trim())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .replace(['D', 'd'], "E")
        .parse()
        .map_err(|_| Error::Format(format!("FITS: bad {key} value `{value}`")))
}

/// Decodes an in-memory FITS file into a `[height, width]` tensor of
/// physical values `BZERO + BSCALE * stored`.
pub fn decode_frame(bytes: &[u8]) -> Result<Tensor> {
    let mut header = Header::default();
    let mut offset = 0;
    let mut ended = false;
    while !ended {
        if offset + BLOCK > bytes.len() {
            return Err(Error::Format("FITS: truncated header (no END card)".into()));
        }
        for c in 0..BLOCK / CARD {
            let raw = &bytes[offset + c * CARD..offset + (c + 1) * CARD];
            let card = std::str::from_utf8(raw)
                .map_err(|_| Error::Format("FITS: header is not ASCII".into()))?;
            let key = card[..8].trim_end();
            if offset == 0 && c == 0 && key != "SIMPLE" {
                return Err(Error::Format("FITS: first card must be SIMPLE".into()));
            }
            if key == "END" {
                ended = true;
                break;
            }
            let Some(value) = card_value(card) else { continue };
            match key {
                "SIMPLE" => header.simple = Some(value == "T"),
                "BITPIX" => header.bitpix = Some(parse_num(key, value)?),
                "NAXIS" => header.naxis = Some(parse_num(key, value)?),
                "NAXIS1" => header.axes[0] = Some(parse_num(key, value)?),
                "NAXIS2" => header.axes[1] = Some(parse_num(key, value)?),
                "BZERO" => header.bzero = Some(parse_num(key, value)?),
                "BSCALE" => header.bscale = Some(parse_num(key, value)?),
                _ => {}
            }
        }
        offset += BLOCK;
    }
    if header.simple != Some(true) {
        return Err(Error::Format("FITS: SIMPLE must be T".into()));
    }
    let bitpix = match header.bitpix {
        Some(16) => Bitpix::I16,
        Some(-32) => Bitpix::F32,
        Some(other) => return Err(Error::Format(format!("FITS: unsupported BITPIX {other}"))),
        None => return Err(Error::Format("FITS: missing BITPIX".into())),
    };
    match header.naxis {
        Some(2) => {}
        Some(n) => return Err(Error::Format(format!("FITS: unsupported NAXIS {n} (only 2-D images)"))),
        None => return Err(Error::Format("FITS: missing NAXIS".into())),
    }
    let (Some(width), Some(height)) = (header.axes[0], header.axes[1]) else {
        return Err(Error::Format("FITS: missing NAXIS1/NAXIS2".into()));
    };
    let bzero = header.bzero.unwrap_or(0.0);
    let bscale = header.bscale.unwrap_or(1.0);
    let n = width * height;
    let need = n * bitpix.bytes();
    let data = bytes.get(offset..offset + need).ok_or_else(|| {
        Error::Format(format!(
            "FITS: truncated data unit (need {need} bytes, have {})",
            bytes.len().saturating_sub(offset)
        ))
    })?;
    let values = match bitpix {
        Bitpix::I16 => data
            .chunks_exact(2)
            .map(|b| bzero + bscale * f64::from(i16::from_be_bytes([b[0], b[1]])))
            .collect(),
        Bitpix::F32 => data
            .chunks_exact(4)
            .map(|b| bzero + bscale * f64::from(f32::from_be_bytes([b[0], b[1], b[2], b[3]])))
            .collect(),
    };
    Tensor::new(vec![height, width], values)
}

fn push_card(out: &mut Vec<u8>, key: &str, value: &str, comment: &str) {
    let mut card = format!("{key:<8}= {value:>20}");
    if !comment.is_empty() {
        card.push_str(" / ");
        card.push_str(comment);
    }
    card.truncate(CARD);
    out.extend_from_slice(format!("{card:<80}").as_bytes());
}

/// Encodes a `[height, width]` tensor. For [`Bitpix::I16`] values are rounded
/// to the nearest integer and clamped to `0..=65535`; for [`Bitpix::F32`] they
/// are narrowed to single precision.
pub fn encode_frame(frame: &Tensor, bitpix: Bitpix) -> Result<Vec<u8>> {
    frame.expect_rank("encode_frame", 2)?;
    frame.ensure_finite("encode_frame")?;
    let (height, width) = (frame.shape()[0], frame.shape()[1]);
    let mut out = Vec::with_capacity(BLOCK + frame.len() * bitpix.bytes());
    push_card(&mut out, "SIMPLE", "T", "conforms to FITS standard");
    push_card(&mut out, "BITPIX", &bitpix.code().to_string(), "array data type");
    push_card(&mut out, "NAXIS", "2", "number of array dimensions");
    push_card(&mut out, "NAXIS1", &width.to_string(), "");
    push_card(&mut out, "NAXIS2", &height.to_string(), "");
    if bitpix == Bitpix::I16 {
        push_card(&mut out, "BZERO", "32768", "offset for unsigned 16-bit data");
        push_card(&mut out, "BSCALE", "1", "");
    }
    out.extend_from_slice(format!("{:<80}", "END").as_bytes());
    out.resize(out.len().div_ceil(BLOCK) * BLOCK, b' ');
    match bitpix {
        Bitpix::I16 => {
            for &v in frame.data() {
                let stored = (v.round().clamp(0.0, 65535.0) - 32768.0) as i16;
                out.extend_from_slice(&stored.to_be_bytes());
            }
        }
        Bitpix::F32 => {
            for &v in frame.data() {
                out.extend_from_slice(&(v as f32).to_be_bytes());
            }
        }
    }
    out.resize(out.len().div_ceil(BLOCK) * BLOCK, 0);
    Ok(out)
}

pub fn read_frame(path: &Path) -> Result<Tensor> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_frame(&bytes).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_frame(frame: &Tensor, bitpix: Bitpix, path: &Path) -> Result<()> {
    std::fs::write(path, encode_frame(frame, bitpix)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(cards: &[&str]) -> Vec<u8> {
        let mut out = Vec::new();
        for c in cards {
            out.extend_from_slice(format!("{c:<80}").as_bytes());
        }
        out.extend_from_slice(format!("{:<80}", "END").as_bytes());
        out.resize(BLOCK, b' ');
        out
    }

    #[test]
    fn unsigned_offset_convention() {
        let mut bytes = header(&[
            "SIMPLE  =                    T",
            "BITPIX  =                   16",
            "NAXIS   =                    2",
            "NAXIS1  =                    1",
            "NAXIS2  =                    1",
            "BZERO   =              32768.0 / unsigned",
        ]);
        bytes.extend_from_slice(&i16::MIN.to_be_bytes());
        let frame = decode_frame(&bytes).unwrap();
        assert_eq!(frame.data(), &[0.0]);
    }

    #[test]
    fn small_frame_round_trips() {
        let frame = Tensor::from_fn(vec![4, 4], |i| (i * 4099 % 65536) as f64);
        for bitpix in [Bitpix::I16, Bitpix::F32] {
            let bytes = encode_frame(&frame, bitpix).unwrap();
            assert_eq!(bytes.len() % BLOCK, 0);
            assert_eq!(decode_frame(&bytes).unwrap(), frame);
        }
    }

    #[test]
    fn rejects_cubes() {
        let bytes = header(&[
            "SIMPLE  =                    T",
            "BITPIX  =                   16",
            "NAXIS   =                    3",
        ]);
        let err = decode_frame(&bytes).unwrap_err();
        assert!(err.to_string().contains("NAXIS 3"), "{err}");
    }

    #[test]
    fn rejects_truncated_data_and_bad_bitpix() {
        let frame = Tensor::zeros(vec![40, 40]);
        let bytes = encode_frame(&frame, Bitpix::F32).unwrap();
        assert!(decode_frame(&bytes[..BLOCK + 100]).is_err());
        let bad = header(&["SIMPLE  =                    T", "BITPIX  =                    8"]);
        assert!(decode_frame(&bad).unwrap_err().to_string().contains("BITPIX 8"));
    }
}
