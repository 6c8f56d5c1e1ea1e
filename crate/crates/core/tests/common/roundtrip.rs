//! write → read → write checks for every on-disk format. Each returns a
//! description of the first mismatch.

use artefact_net::data::catalog::parse_catalog_str;
use artefact_net::data::fits::{decode_frame, encode_frame};
use artefact_net::data::pgm::{decode_pgm, encode_pgm};
use artefact_net::data::{write_catalog, Bitpix, DatasetManifest, ManifestEntry, SourceRecord};
use artefact_net::nn::Checkpoint;
use artefact_net::Tensor;

type Check = Result<(), String>;

fn same(what: &str, a: &[u8], b: &[u8]) -> Check {
    if a == b {
        Ok(())
    } else {
        Err(format!("{what}: second encoding differs ({} vs {} bytes)", a.len(), b.len()))
    }
}

/// Physical values must be representable: integers in 0..=65535 for I16,
/// single-precision values for F32.
pub fn fits(frame: &Tensor, bitpix: Bitpix) -> Check {
    let first = encode_frame(frame, bitpix).map_err(|e| e.to_string())?;
    if first.len() % 2880 != 0 {
        return Err(format!("FITS: {} bytes is not a whole number of blocks", first.len()));
    }
    let back = decode_frame(&first).map_err(|e| e.to_string())?;
    if back != *frame {
        return Err("FITS: decoded values differ".into());
    }
    same("FITS", &first, &encode_frame(&back, bitpix).map_err(|e| e.to_string())?)
}

pub fn pgm(width: usize, height: usize, pixels: &[u8]) -> Check {
    let first = encode_pgm(width, height, pixels).map_err(|e| e.to_string())?;
    let (w, h, data) = decode_pgm(&first).map_err(|e| e.to_string())?;
    if (w, h) != (width, height) || data != pixels {
        return Err("PGM: decoded image differs".into());
    }
    same("PGM", &first, &encode_pgm(w, h, &data).map_err(|e| e.to_string())?)
}

pub fn catalog(records: &[SourceRecord]) -> Check {
    let first = write_catalog(records);
    let back = parse_catalog_str(&first).map_err(|e| e.to_string())?;
    if back.len() != records.len() || back.iter().zip(records).any(|(a, b)| a.id != b.id || a.flags != b.flags || a.mag != b.mag) {
        return Err("catalog: decoded rows differ".into());
    }
    same("catalog", first.as_bytes(), write_catalog(&back).as_bytes())
}

pub fn manifest(m: &DatasetManifest) -> Check {
    let first = m.to_text();
    let back = DatasetManifest::parse(&first).map_err(|e| e.to_string())?;
    if back != *m {
        return Err("manifest: decoded entries differ".into());
    }
    same("manifest", first.as_bytes(), back.to_text().as_bytes())
}

pub fn checkpoint(ck: &Checkpoint) -> Check {
    let first = ck.encode();
    let back = Checkpoint::decode(&first).map_err(|e| e.to_string())?;
    if back != *ck {
        return Err("checkpoint: decoded state differs".into());
    }
    same("checkpoint", &first, &back.encode())
}

pub fn manifest_from(entries: Vec<ManifestEntry>, seed: u64) -> DatasetManifest {
    DatasetManifest { seed, entries }
}
