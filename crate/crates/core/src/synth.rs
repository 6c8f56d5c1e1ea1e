//! Synthetic polarimeter frames with known labels.
//!
//! Stars are circular Gaussians, artefacts are Gaussians stretched along x
//! (horizontal streaks). Both sit on a flat background with additive
//! Gaussian noise. A dataset run renders frames, writes the frame and a
//! truth catalog, then pushes the frame through the same mask, star
//! selection and cutout extraction as real data.

use std::path::{Path, PathBuf};

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::config::KeyValues;
use crate::data::catalog::{read_catalog_table, records_from_table, write_catalog_with};
use crate::data::cutout::cutout_origin;
use crate::data::manifest::cutout_file_name;
use crate::data::{
    apply_mask, extract_cutout, select_stars_by_magnitude, split_dataset, write_cutout, write_frame, Bitpix,
    DatasetManifest, Label, MaskSpec, SourceRecord, CUTOUT_SIZE,
};
use crate::error::{Error, Result};
use crate::nn::rng::{derived, Purpose, Rng};
use crate::tensor::Tensor;

/// Footprints extend this many sigmas along each axis.
pub const FOOTPRINT_SIGMAS: f64 = 3.0;
/// Profiles are evaluated out to this many sigmas.
pub const RENDER_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    pub background: f64,
    pub noise_sigma: f64,
    pub zero_point: f64,
    pub n_stars: usize,
    pub star_mag: (f64, f64),
    pub n_artefacts: usize,
    pub artefact_mag: (f64, f64),
    pub star_sigma: (f64, f64),
    pub artefact_sigma_x: (f64, f64),
    pub artefact_sigma_y: (f64, f64),
    pub seed: u64,
    /// Position draws per object before giving up.
    pub max_retries: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            width: 1024,
            height: 1024,
            background: 1000.0,
            noise_sigma: 10.0,
            zero_point: 25.0,
            n_stars: 250,
            star_mag: (11.0, 16.5),
            n_artefacts: 10,
            artefact_mag: (11.5, 14.0),
            star_sigma: (1.5, 3.0),
            artefact_sigma_x: (6.0, 14.0),
            artefact_sigma_y: (1.5, 3.0),
            seed: 0,
            max_retries: 1000,
        }
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64), positive: bool) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) || (positive && lo <= 0.0) {
        return Err(Error::Config(format!("{name}: invalid range {lo}..{hi}")));
    }
    Ok(())
}

fn parse_range(kv: &KeyValues, key: &str, default: (f64, f64)) -> Result<(f64, f64)> {
    let Some(text) = kv.get_str(key)? else { return Ok(default) };
    let parts: Vec<f64> = text
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("key `{key}`: expected two numbers, got `{text}`")))?;
    match parts[..] {
        [lo, hi] => Ok((lo, hi)),
        _ => Err(Error::Config(format!("key `{key}`: expected two numbers, got `{text}`"))),
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("frame dimensions must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.background.is_finite() && self.zero_point.is_finite()) {
            return Err(Error::Config("background, noise and zero point must be finite, noise ≥ 0".into()));
        }
        check_range("star_mag", self.star_mag, false)?;
        check_range("artefact_mag", self.artefact_mag, false)?;
        check_range("star_sigma", self.star_sigma, true)?;
        check_range("artefact_sigma_x", self.artefact_sigma_x, true)?;
        check_range("artefact_sigma_y", self.artefact_sigma_y, true)?;
        if self.artefact_sigma_x.0 <= self.artefact_sigma_y.1 {
            return Err(Error::Config(
                "artefact sigma along x must exceed sigma along y for every draw".into(),
            ));
        }
        Ok(())
    }

    /// Total counts of an object of magnitude `mag`.
    pub fn flux(&self, mag: f64) -> f64 {
        10f64.powf(-0.4 * (mag - self.zero_point))
    }

    /// Reads `scene.*` keys over the defaults.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let d = SceneConfig::default();
        let cfg = SceneConfig {
            width: kv.get_or("scene.width", d.width)?,
            height: kv.get_or("scene.height", d.height)?,
            background: kv.get_or("scene.background", d.background)?,
            noise_sigma: kv.get_or("scene.noise_sigma", d.noise_sigma)?,
            zero_point: kv.get_or("scene.zero_point", d.zero_point)?,
            n_stars: kv.get_or("scene.stars", d.n_stars)?,
            star_mag: parse_range(kv, "scene.star_mag", d.star_mag)?,
            n_artefacts: kv.get_or("scene.artefacts", d.n_artefacts)?,
            artefact_mag: parse_range(kv, "scene.artefact_mag", d.artefact_mag)?,
            star_sigma: parse_range(kv, "scene.star_sigma", d.star_sigma)?,
            artefact_sigma_x: parse_range(kv, "scene.artefact_sigma_x", d.artefact_sigma_x)?,
            artefact_sigma_y: parse_range(kv, "scene.artefact_sigma_y", d.artefact_sigma_y)?,
            seed: kv.get_or("seed", d.seed)?,
            max_retries: kv.get_or("scene.max_retries", d.max_retries)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let r = |(lo, hi): (f64, f64)| format!("{lo} {hi}");
        format!(
            "seed={}\nscene.width={}\nscene.height={}\nscene.background={}\nscene.noise_sigma={}\n\
             scene.zero_point={}\nscene.stars={}\nscene.star_mag={}\nscene.artefacts={}\n\
             scene.artefact_mag={}\nscene.star_sigma={}\nscene.artefact_sigma_x={}\n\
             scene.artefact_sigma_y={}\nscene.max_retries={}\n",
            self.seed,
            self.width,
            self.height,
            self.background,
            self.noise_sigma,
            self.zero_point,
            self.n_stars,
            r(self.star_mag),
            self.n_artefacts,
            r(self.artefact_mag),
            r(self.star_sigma),
            r(self.artefact_sigma_x),
            r(self.artefact_sigma_y),
            self.max_retries
        )
    }
}

/// A rendered object with its exact parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthObject {
    pub id: u64,
    /// 0-based centre.
    pub x: f64,
    pub y: f64,
    pub mag: f64,
    pub flux: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub label: Label,
}

impl TruthObject {
    pub fn record(&self) -> SourceRecord {
        SourceRecord { id: self.id, x: self.x, y: self.y, mag: self.mag, flags: 0 }
    }

    /// Inside the 3-sigma ellipse.
    pub fn footprint_contains(&self, px: f64, py: f64) -> bool {
        let u = (px - self.x) / (FOOTPRINT_SIGMAS * self.sigma_x);
        let v = (py - self.y) / (FOOTPRINT_SIGMAS * self.sigma_y);
        u * u + v * v <= 1.0
    }

    /// Footprint over a `size × size` window at `(ox, oy)`, row-major.
    pub fn footprint_in_window(&self, ox: i64, oy: i64, size: usize) -> Vec<bool> {
        let mut mask = Vec::with_capacity(size * size);
        for r in 0..size as i64 {
            for c in 0..size as i64 {
                mask.push(self.footprint_contains((ox + c) as f64, (oy + r) as f64));
            }
        }
        mask
    }

    /// Footprint over the object's own cutout.
    pub fn cutout_footprint(&self) -> Vec<bool> {
        let (ox, oy) = cutout_origin(self.x, self.y, CUTOUT_SIZE);
        self.footprint_in_window(ox, oy, CUTOUT_SIZE)
    }

    /// Frame pixels inside the footprint.
    pub fn footprint_pixels(&self, width: usize, height: usize) -> usize {
        let (x0, x1, y0, y1) = self.pixel_box(FOOTPRINT_SIGMAS, width, height);
        let mut n = 0;
        for r in y0..=y1 {
            for c in x0..=x1 {
                n += self.footprint_contains(c as f64, r as f64) as usize;
            }
        }
        n
    }

    /// Pixel range within `k` sigmas, clipped to the frame.
    fn pixel_box(&self, k: f64, width: usize, height: usize) -> (usize, usize, usize, usize) {
        let clip = |v: f64, n: usize| v.clamp(0.0, (n - 1) as f64) as usize;
        (
            clip((self.x - k * self.sigma_x).ceil(), width),
            clip((self.x + k * self.sigma_x).floor(), width),
            clip((self.y - k * self.sigma_y).ceil(), height),
            clip((self.y + k * self.sigma_y).floor(), height),
        )
    }

    fn fits_in(&self, width: usize, height: usize) -> bool {
        let (hx, hy) = (FOOTPRINT_SIGMAS * self.sigma_x, FOOTPRINT_SIGMAS * self.sigma_y);
        self.x - hx >= 0.0
            && self.y - hy >= 0.0
            && self.x + hx <= (width - 1) as f64
            && self.y + hy <= (height - 1) as f64
    }
}

/// `flux / (noise_sigma · √pixels)`; +∞ without noise.
pub fn snr(flux: f64, noise_sigma: f64, footprint_pixels: usize) -> f64 {
    if noise_sigma == 0.0 {
        return f64::INFINITY;
    }
    flux / (noise_sigma * (footprint_pixels as f64).sqrt())
}

pub fn ground_truth_snr(object: &TruthObject, cfg: &SceneConfig) -> f64 {
    snr(object.flux, cfg.noise_sigma, object.footprint_pixels(cfg.width, cfg.height))
}

#[derive(Debug, Clone)]
pub struct Scene {
    /// `[height, width]` counts.
    pub frame: Tensor,
    /// Stars first, then artefacts; ids count from 1.
    pub truth: Vec<TruthObject>,
}

fn uniform(rng: &mut Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Frame 0 of `cfg.seed`.
pub fn render_scene(cfg: &SceneConfig) -> Result<Scene> {
    render_frame(cfg, 0)
}

/// Frame `index` of `cfg.seed`; every frame has its own random stream.
pub fn render_frame(cfg: &SceneConfig, index: u64) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = derived(cfg.seed, Purpose::Scene, index);
    let mut truth = Vec::with_capacity(cfg.n_stars + cfg.n_artefacts);
    let kinds = std::iter::repeat_n(Label::Star, cfg.n_stars).chain(std::iter::repeat_n(Label::Artefact, cfg.n_artefacts));
    for (k, label) in kinds.enumerate() {
        let (mag, sigma_x, sigma_y) = match label {
            Label::Star => {
                let s = uniform(&mut rng, cfg.star_sigma);
                (uniform(&mut rng, cfg.star_mag), s, s)
            }
            Label::Artefact => {
                let mag = uniform(&mut rng, cfg.artefact_mag);
                let sx = uniform(&mut rng, cfg.artefact_sigma_x);
                (mag, sx, uniform(&mut rng, cfg.artefact_sigma_y))
            }
        };
        let mut obj = TruthObject {
            id: k as u64 + 1,
            x: 0.0,
            y: 0.0,
            mag,
            flux: cfg.flux(mag),
            sigma_x,
            sigma_y,
            label,
        };
        let mut placed = false;
        for _ in 0..cfg.max_retries.max(1) {
            obj.x = rng.random_range(0.0..(cfg.width - 1).max(1) as f64);
            obj.y = rng.random_range(0.0..(cfg.height - 1).max(1) as f64);
            if obj.fits_in(cfg.width, cfg.height) {
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Invalid(format!(
                "could not place object {} (sigma {:.2}×{:.2}) inside a {}x{} frame",
                obj.id, sigma_x, sigma_y, cfg.width, cfg.height
            )));
        }
        truth.push(obj);
    }

    let (w, h) = (cfg.width, cfg.height);
    let mut data = vec![cfg.background; w * h];
    for obj in &truth {
        let amp = obj.flux / (2.0 * std::f64::consts::PI * obj.sigma_x * obj.sigma_y);
        let (x0, x1, y0, y1) = obj.pixel_box(RENDER_SIGMAS, w, h);
        for r in y0..=y1 {
            let dy = (r as f64 - obj.y) / obj.sigma_y;
            let fy = (-0.5 * dy * dy).exp();
            for c in x0..=x1 {
                let dx = (c as f64 - obj.x) / obj.sigma_x;
                data[r * w + c] += amp * fy * (-0.5 * dx * dx).exp();
            }
        }
    }
    if cfg.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, cfg.noise_sigma).expect("validated sigma");
        for v in &mut data {
            *v += noise.sample(&mut rng);
        }
    }
    Ok(Scene { frame: Tensor::new(vec![h, w], data)?, truth })
}

pub const CLASS_COLUMN: &str = "CLASS_TRUE";

/// Catalog text with the standard columns plus `CLASS_TRUE` (1 star,
/// 0 artefact), `FLUX`, `SIGMA_X`, `SIGMA_Y` and `SNR`.
pub fn write_truth_catalog(truth: &[TruthObject], cfg: &SceneConfig) -> String {
    let records: Vec<SourceRecord> = truth.iter().map(TruthObject::record).collect();
    let col = |f: &dyn Fn(&TruthObject) -> f64| truth.iter().map(f).collect::<Vec<f64>>();
    write_catalog_with(
        &records,
        &[
            (CLASS_COLUMN, col(&|t| t.label.target())),
            ("FLUX", col(&|t| t.flux)),
            ("SIGMA_X", col(&|t| t.sigma_x)),
            ("SIGMA_Y", col(&|t| t.sigma_y)),
            ("SNR", col(&|t| ground_truth_snr(t, cfg))),
        ],
    )
}

pub fn read_truth_catalog(path: &Path) -> Result<Vec<TruthObject>> {
    let table = read_catalog_table(path)?;
    let records = records_from_table(&table)?;
    let class: Vec<u8> = table.column(CLASS_COLUMN)?;
    let flux: Vec<f64> = table.column("FLUX")?;
    let sx: Vec<f64> = table.column("SIGMA_X")?;
    let sy: Vec<f64> = table.column("SIGMA_Y")?;
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(TruthObject {
                id: r.id,
                x: r.x,
                y: r.y,
                mag: r.mag,
                flux: flux[i],
                sigma_x: sx[i],
                sigma_y: sy[i],
                label: Label::from_target(class[i])?,
            })
        })
        .collect()
}

/// Everything a dataset run needs besides the scene itself.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub scene: SceneConfig,
    pub n_frames: usize,
    /// Half-width of the central cross of the instrument mask.
    pub mask_band: usize,
    pub mask_border: usize,
    pub bin_width: f64,
    pub stars_per_bin: usize,
    pub max_bins: usize,
    /// Trim the larger class per frame so both classes have equal counts.
    pub balance: bool,
    /// Also write each frame as a FITS file.
    pub write_frames: bool,
    pub threads: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            scene: SceneConfig::default(),
            n_frames: 10,
            mask_band: 16,
            mask_border: 16,
            bin_width: 1.0,
            stars_per_bin: 1,
            max_bins: 5,
            balance: true,
            write_frames: true,
            threads: 1,
        }
    }
}

impl DatasetConfig {
    pub fn mask(&self) -> MaskSpec {
        MaskSpec::cross_and_border(self.scene.width, self.scene.height, self.mask_band, self.mask_border)
    }

    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let d = DatasetConfig::default();
        let cfg = DatasetConfig {
            scene: SceneConfig::from_kv(kv)?,
            n_frames: kv.get_or("synth.frames", d.n_frames)?,
            mask_band: kv.get_or("synth.mask_band", d.mask_band)?,
            mask_border: kv.get_or("synth.mask_border", d.mask_border)?,
            bin_width: kv.get_or("synth.bin_width", d.bin_width)?,
            stars_per_bin: kv.get_or("synth.stars_per_bin", d.stars_per_bin)?,
            max_bins: kv.get_or("synth.max_bins", d.max_bins)?,
            balance: kv.get_bool("synth.balance", d.balance)?,
            write_frames: kv.get_bool("synth.write_frames", d.write_frames)?,
            threads: kv.get_or("synth.threads", d.threads)?,
        };
        if !(cfg.bin_width > 0.0) {
            return Err(Error::Config("synth.bin_width must be positive".into()));
        }
        cfg.mask().validate(cfg.scene.width, cfg.scene.height)?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        format!(
            "{}synth.frames={}\nsynth.mask_band={}\nsynth.mask_border={}\nsynth.bin_width={}\n\
             synth.stars_per_bin={}\nsynth.max_bins={}\nsynth.balance={}\nsynth.write_frames={}\n\
             synth.threads={}\n",
            self.scene.to_text(),
            self.n_frames,
            self.mask_band,
            self.mask_border,
            self.bin_width,
            self.stars_per_bin,
            self.max_bins,
            self.balance,
            self.write_frames,
            self.threads
        )
    }
}

/// One cutout written by [`make_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthEntry {
    /// Relative to the dataset directory.
    pub path: String,
    pub frame: u64,
    pub truth: TruthObject,
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub manifest: DatasetManifest,
    /// In frame order, then stars before artefacts.
    pub entries: Vec<SynthEntry>,
}

impl SynthDataset {
    pub fn entry(&self, path: &str) -> Option<&SynthEntry> {
        self.entries.iter().find(|e| e.path == path)
    }
}

pub fn frame_file_name(frame: u64) -> String {
    format!("frame_{frame:05}.fits")
}

pub fn catalog_file_name(frame: u64) -> String {
    format!("frame_{frame:05}.cat")
}

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const MASK_FILE: &str = "mask.txt";

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Renders frame `f` and writes its files; returns the cutouts it produced.
fn build_frame(cfg: &DatasetConfig, mask: &MaskSpec, f: u64, out: &Path) -> Result<Vec<SynthEntry>> {
    let scene = render_frame(&cfg.scene, f)?;
    // Stored frames are single precision; cutouts come from what is stored.
    let frame = scene.frame.map(|v| v as f32 as f64);
    if cfg.write_frames {
        write_frame(&frame, Bitpix::F32, &out.join("frames").join(frame_file_name(f)))?;
    }
    write_file(
        &out.join("catalogs").join(catalog_file_name(f)),
        write_truth_catalog(&scene.truth, &cfg.scene),
    )?;

    let (w, h) = (cfg.scene.width, cfg.scene.height);
    let records: Vec<SourceRecord> = scene.truth.iter().map(TruthObject::record).collect();
    let (kept, _) = apply_mask(&records, mask, w, h, CUTOUT_SIZE);
    let by_id = |id: u64| scene.truth[(id - 1) as usize];
    let (stars, artefacts): (Vec<SourceRecord>, Vec<SourceRecord>) =
        kept.into_iter().partition(|r| by_id(r.id).label == Label::Star);
    let mut stars = select_stars_by_magnitude(&stars, cfg.bin_width, cfg.stars_per_bin, cfg.max_bins);
    let mut artefacts = artefacts;
    if cfg.balance {
        let n = stars.len().min(artefacts.len());
        stars.truncate(n);
        artefacts.truncate(n);
    }

    let mut entries = Vec::with_capacity(stars.len() + artefacts.len());
    for r in stars.iter().chain(&artefacts) {
        let cutout = extract_cutout(&frame, r.x, r.y)?;
        let path = format!("cutouts/{}", cutout_file_name(f, r.id));
        write_cutout(&cutout, &out.join(&path))?;
        entries.push(SynthEntry { path, frame: f, truth: by_id(r.id) });
    }
    Ok(entries)
}

/// Writes `frames/`, `catalogs/`, `cutouts/`, `mask.txt` and `manifest.txt`
/// under `out`. The split uses `cfg.scene.seed`.
pub fn make_dataset(cfg: &DatasetConfig, out: &Path) -> Result<SynthDataset> {
    cfg.scene.validate()?;
    let mask = cfg.mask();
    mask.validate(cfg.scene.width, cfg.scene.height)?;
    for sub in ["frames", "catalogs", "cutouts"] {
        if sub != "frames" || cfg.write_frames {
            create_dir(&out.join(sub))?;
        }
    }
    write_file(&out.join(MASK_FILE), mask.to_text())?;

    let n = cfg.n_frames;
    let threads = cfg.threads.clamp(1, n.max(1));
    let mut per_frame: Vec<Result<Vec<SynthEntry>>> = Vec::with_capacity(n);
    if threads == 1 {
        for f in 0..n {
            per_frame.push(build_frame(cfg, &mask, f as u64, out));
        }
    } else {
        let chunk = n.div_ceil(threads);
        let results: Vec<Vec<Result<Vec<SynthEntry>>>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let mask = &mask;
                    s.spawn(move || {
                        (t * chunk..((t + 1) * chunk).min(n))
                            .map(|f| build_frame(cfg, mask, f as u64, out))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("frame worker panicked")).collect()
        });
        per_frame.extend(results.into_iter().flatten());
    }
    let mut entries = Vec::new();
    for r in per_frame {
        entries.extend(r?);
    }

    let manifest = if entries.is_empty() {
        DatasetManifest::empty(cfg.scene.seed)
    } else {
        split_dataset(entries.iter().map(|e| (e.path.clone(), e.truth.label)).collect(), cfg.scene.seed)?
    };
    manifest.save(&out.join(MANIFEST_FILE))?;
    Ok(SynthDataset { manifest, entries })
}

/// Path of a frame file inside a dataset directory.
pub fn frame_path(root: &Path, frame: u64) -> PathBuf {
    root.join("frames").join(frame_file_name(frame))
}

pub fn catalog_path(root: &Path, frame: u64) -> PathBuf {
    root.join("catalogs").join(catalog_file_name(frame))
}
