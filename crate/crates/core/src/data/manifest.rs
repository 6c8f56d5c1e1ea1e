//! Dataset manifests: which cutout file is which class and which split.
//!
//! ```text
//! # artefact-net manifest
//! # seed=42
//! # train star=8 artefact=9
//! # val star=2 artefact=2
//! # path<TAB>label<TAB>split
//! cutouts/f0000_s000012.pgm	1	train
//! ```
//!
//! Paths are relative to the manifest's directory; labels are 1 (star) or
//! 0 (artefact).

use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;

use super::pgm::read_cutout;
use super::sample::{Label, Sample};
use crate::error::{Error, Result};
use crate::nn::rng::{derived, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            other => Err(Error::Format(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub label: Label,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

/// Fraction of samples assigned to training (rounded down).
pub const TRAIN_FRACTION_NUM: usize = 4;
pub const TRAIN_FRACTION_DEN: usize = 5;

/// Shuffles `(path, label)` items with `seed` and sends the first 80% (floor)
/// to training, the rest to validation.
pub fn split_dataset(items: Vec<(String, Label)>, seed: u64) -> Result<DatasetManifest> {
    if items.is_empty() {
        return Err(Error::Invalid("cannot split an empty dataset".into()));
    }
    let mut items = items;
    items.shuffle(&mut derived(seed, Purpose::Split, 0));
    let n_train = items.len() * TRAIN_FRACTION_NUM / TRAIN_FRACTION_DEN;
    let entries = items
        .into_iter()
        .enumerate()
        .map(|(i, (path, label))| ManifestEntry {
            path,
            label,
            split: if i < n_train { Split::Train } else { Split::Val },
        })
        .collect();
    Ok(DatasetManifest { seed, entries })
}

impl DatasetManifest {
    pub fn empty(seed: u64) -> Self {
        Self { seed, entries: Vec::new() }
    }

    pub fn count(&self, split: Split, label: Label) -> usize {
        self.entries
            .iter()
            .filter(|e| e.split == split && e.label == label)
            .count()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# artefact-net manifest\n# seed={}\n", self.seed);
        for split in [Split::Train, Split::Val] {
            s.push_str(&format!(
                "# {split} star={} artefact={}\n",
                self.count(split, Label::Star),
                self.count(split, Label::Artefact)
            ));
        }
        s.push_str("# path\tlabel\tsplit\n");
        for e in &self.entries {
            s.push_str(&format!("{}\t{}\t{}\n", e.path, e.label.target() as u8, e.split));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut seed = None;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("seed=") {
                    seed = Some(v.parse().map_err(|_| {
                        Error::Format(format!("manifest line {}: bad seed `{v}`", i + 1))
                    })?);
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [path, label, split] = fields[..] else {
                return Err(Error::Format(format!(
                    "manifest line {}: expected path<TAB>label<TAB>split",
                    i + 1
                )));
            };
            let label = match label {
                "1" => Label::Star,
                "0" => Label::Artefact,
                other => {
                    return Err(Error::Format(format!("manifest line {}: bad label `{other}`", i + 1)))
                }
            };
            entries.push(ManifestEntry {
                path: path.to_string(),
                label,
                split: split
                    .parse()
                    .map_err(|e| Error::Format(format!("manifest line {}: {e}", i + 1)))?,
            });
        }
        let seed = seed.ok_or_else(|| Error::Format("manifest: missing `# seed=` header".into()))?;
        Ok(Self { seed, entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Reads and normalizes the cutouts of one split. `root` is the
    /// directory paths are relative to.
    pub fn load_samples(&self, root: &Path, split: Split) -> Result<Vec<Sample>> {
        self.split(split)
            .map(|e| {
                let cutout = read_cutout(&root.join(&e.path))?;
                let (frame, source) = provenance(&e.path);
                Ok(Sample::from_cutout(&cutout, e.label, source, frame))
            })
            .collect()
    }
}

/// Frame and source ids from a `fFFFF_sSSSSSS.pgm` file name, or zeros.
pub fn provenance(path: &str) -> (u64, u64) {
    let stem = Path::new(path)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("");
    let mut parts = stem.split('_');
    let frame = parts.next().and_then(|p| p.strip_prefix('f')).and_then(|v| v.parse().ok());
    let source = parts.next().and_then(|p| p.strip_prefix('s')).and_then(|v| v.parse().ok());
    (frame.unwrap_or(0), source.unwrap_or(0))
}

pub fn cutout_file_name(frame: u64, source: u64) -> String {
    format!("f{frame:05}_s{source:06}.pgm")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(n: usize) -> Vec<(String, Label)> {
        (0..n)
            .map(|i| (format!("c{i}.pgm"), if i % 2 == 0 { Label::Star } else { Label::Artefact }))
            .collect()
    }

    #[test]
    fn eighty_twenty_floor() {
        let m = split_dataset(items(1761), 3).unwrap();
        assert_eq!(m.split(Split::Train).count(), 1408);
        assert_eq!(m.split(Split::Val).count(), 353);
        let m = split_dataset(items(10), 3).unwrap();
        assert_eq!(m.split(Split::Train).count(), 8);
        assert_eq!(m.split(Split::Val).count(), 2);
    }

    #[test]
    fn same_seed_same_manifest() {
        assert_eq!(split_dataset(items(50), 9).unwrap(), split_dataset(items(50), 9).unwrap());
        assert_ne!(split_dataset(items(50), 9).unwrap(), split_dataset(items(50), 10).unwrap());
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(split_dataset(Vec::new(), 1).is_err());
    }

    #[test]
    fn text_round_trip() {
        let m = split_dataset(items(7), 1).unwrap();
        let text = m.to_text();
        assert_eq!(DatasetManifest::parse(&text).unwrap(), m);
        assert!(DatasetManifest::parse("a\t1\ttrain\n").is_err());
        assert!(DatasetManifest::parse("# seed=1\na\t2\ttrain\n").is_err());
    }

    #[test]
    fn provenance_from_name() {
        assert_eq!(provenance(&format!("cutouts/{}", cutout_file_name(12, 345))), (12, 345));
        assert_eq!(provenance("other.pgm"), (0, 0));
    }
}
