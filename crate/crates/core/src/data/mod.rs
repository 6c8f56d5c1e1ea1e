//! From raw files to training-ready tensors: catalogs, frames, cutouts,
//! the instrument mask, star selection, augmentation and dataset splits.

pub mod augment;
pub mod catalog;
pub mod cutout;
pub mod fits;
pub mod manifest;
pub mod mask;
pub mod pgm;
mod sample;

pub use augment::{augment, AugmentPolicy};
pub use catalog::{parse_catalog, write_catalog, SourceRecord};
pub use cutout::{extract_cutout, normalize, select_stars_by_magnitude, Cutout, CUTOUT_SIZE};
pub use fits::{read_frame, write_frame, Bitpix};
pub use manifest::{split_dataset, DatasetManifest, ManifestEntry, Split};
pub use mask::{apply_mask, MaskSpec, Rect, RejectReason};
pub use pgm::{read_cutout, write_cutout};
pub use sample::{Label, Sample};
