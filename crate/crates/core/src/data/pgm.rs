//! Binary PGM (`P5`) images, 8-bit.

use std::path::Path;

use super::cutout::{Cutout, CUTOUT_SIZE};
use crate::error::{Error, Result};

/// Decodes a `P5` image with maxval 255. Header comments are allowed.
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut pos = 0;
    let mut token = |name: &str| -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format(format!("PGM: missing {name}")));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token("magic")?;
    if magic != "P5" {
        return Err(Error::Format(format!("PGM: expected magic P5, got `{magic}`")));
    }
    let mut num = |name: &str| -> Result<usize> {
        let t = token(name)?;
        t.parse()
            .map_err(|_| Error::Format(format!("PGM: {name} `{t}` is not a number")))
    };
    let width = num("width")?;
    let height = num("height")?;
    let maxval = num("maxval")?;
    if maxval != 255 {
        return Err(Error::Format(format!("PGM: maxval must be 255, got {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::Format("PGM: missing raster".into()));
    }
    let data = &bytes[pos + 1..];
    if data.len() != width * height {
        return Err(Error::Format(format!(
            "PGM: expected {} raster bytes, found {}",
            width * height,
            data.len()
        )));
    }
    Ok((width, height, data.to_vec()))
}

pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    if pixels.len() != width * height {
        return Err(Error::Invalid(format!(
            "PGM: {width}x{height} needs {} bytes, got {}",
            width * height,
            pixels.len()
        )));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    Ok(out)
}

pub fn decode_cutout(bytes: &[u8]) -> Result<Cutout> {
    let (w, h, data) = decode_pgm(bytes)?;
    if w != CUTOUT_SIZE || h != CUTOUT_SIZE {
        return Err(Error::Format(format!(
            "cutout must be {CUTOUT_SIZE}x{CUTOUT_SIZE}, got {w}x{h}"
        )));
    }
    Cutout::new(data)
}

pub fn encode_cutout(cutout: &Cutout) -> Vec<u8> {
    encode_pgm(CUTOUT_SIZE, CUTOUT_SIZE, cutout.as_bytes()).expect("cutout size is fixed")
}

pub fn read_cutout(path: &Path) -> Result<Cutout> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_cutout(&bytes).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_cutout(cutout: &Cutout, path: &Path) -> Result<()> {
    std::fs::write(path, encode_cutout(cutout)).map_err(|e| Error::io(path, e))
}
