//! The `artefact-net` command line.
//!
//! Every subcommand reads one `key=value` config file. Relative paths in a
//! config resolve against the config file's directory, and unknown keys are
//! rejected. Exit codes: 0 success, 2 usage or config error, 3 data or IO
//! error, 4 non-finite numbers during training or inference.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::KeyValues;
use crate::data::catalog::read_catalog;
use crate::data::{read_cutout, read_frame, normalize, AugmentPolicy, DatasetManifest, Label, MaskSpec, Split};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::nn::train::{predict_all, THRESHOLD};
use crate::nn::{load_checkpoint, save_checkpoint, Checkpoint, Network, TrainConfig, Trainer};
use crate::pipeline::{classify_frame, report_csv, summarize};
use crate::saliency::{saliency_map, write_saliency_pgm};
use crate::synth::{make_dataset, DatasetConfig, MANIFEST_FILE};
use crate::zoo::model_from_kv;

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const HISTORY_FILE: &str = "history.csv";
pub const METRICS_FILE: &str = "metrics.txt";
pub const ROC_FILE: &str = "roc.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const SCORES_FILE: &str = "scores.csv";

#[derive(Debug, Parser)]
#[command(name = "artefact-net", version, about = "Star/artefact classifier for polarimeter frames")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render synthetic frames and build a labelled cutout dataset in --out.
    Synth(Common),
    /// Train a model from a dataset manifest; writes model.ckpt and history.csv to --out.
    Train(Common),
    /// Score one manifest split; writes metrics.txt, roc.csv, histogram.csv and scores.csv to --out.
    Evaluate(Common),
    /// Classify every catalogued source of a frame; writes the CSV report to --out.
    Classify(Common),
    /// Write one saliency map per cutout to --out, same file names.
    Saliency(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Configuration file (key=value lines).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory, or report file for `classify`.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Overrides the seed in the config (`synth`, `train`).
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Star probability at or above which a source counts as a star.
    #[arg(long, value_name = "X")]
    pub threshold: Option<f64>,
    /// Positive class for the evaluation report.
    #[arg(long, value_name = "star|artefact")]
    pub positive_class: Option<Label>,
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code; messages go to standard error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(c) => cmd_synth(&c),
        Command::Train(c) => cmd_train(&c),
        Command::Evaluate(c) => cmd_evaluate(&c),
        Command::Classify(c) => cmd_classify(&c),
        Command::Saliency(c) => cmd_saliency(&c),
    }
}

fn load_config(common: &Common) -> Result<KeyValues> {
    let mut kv = KeyValues::load(&common.config)?;
    if let Some(t) = common.threshold {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Config(format!("--threshold {t} is outside [0, 1]")));
        }
    }
    if let Some(seed) = common.seed {
        kv.set("seed", seed);
    }
    Ok(kv)
}

fn reject(common: &Common, cmd: &str, seed: bool, threshold: bool, positive: bool) -> Result<()> {
    let bad = [
        (seed && common.seed.is_some(), "--seed"),
        (threshold && common.threshold.is_some(), "--threshold"),
        (positive && common.positive_class.is_some(), "--positive-class"),
    ];
    match bad.iter().find(|(b, _)| *b) {
        Some((_, flag)) => Err(Error::Config(format!("{flag} has no effect on `{cmd}`"))),
        None => Ok(()),
    }
}

fn threshold(common: &Common, kv: &KeyValues) -> Result<f64> {
    let t = match common.threshold {
        Some(t) => {
            // read it anyway so the key does not count as unknown
            kv.get::<f64>("threshold")?;
            t
        }
        None => kv.get_or("threshold", THRESHOLD)?,
    };
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Config(format!("threshold {t} is outside [0, 1]")));
    }
    Ok(t)
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Samples of one split; paths in the manifest are relative to `data_root`
/// (default: the manifest's directory).
fn manifest_samples(kv: &KeyValues) -> Result<(DatasetManifest, PathBuf)> {
    let manifest_path = kv.require_path("manifest")?;
    let root = match kv.path("data_root")? {
        Some(p) => p,
        None => manifest_path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    Ok((DatasetManifest::load(&manifest_path)?, root))
}

pub fn cmd_synth(common: &Common) -> Result<()> {
    reject(common, "synth", false, true, true)?;
    let kv = load_config(common)?;
    let cfg = DatasetConfig::from_kv(&kv)?;
    kv.finish()?;
    let ds = make_dataset(&cfg, &common.out)?;
    let m = &ds.manifest;
    eprintln!(
        "{} cutouts: train {} star / {} artefact, val {} star / {} artefact -> {}",
        m.entries.len(),
        m.count(Split::Train, Label::Star),
        m.count(Split::Train, Label::Artefact),
        m.count(Split::Val, Label::Star),
        m.count(Split::Val, Label::Artefact),
        common.out.join(MANIFEST_FILE).display()
    );
    Ok(())
}

pub fn cmd_train(common: &Common) -> Result<()> {
    reject(common, "train", false, true, true)?;
    let mut kv = load_config(common)?;
    if let Some(seed) = common.seed {
        kv.set("train.seed", seed);
        kv.get::<u64>("seed")?;
    }
    let model = model_from_kv(&kv)?;
    let train_cfg = TrainConfig::from_kv(&kv)?;
    let policy = AugmentPolicy::from_kv(&kv)?;
    let (manifest, root) = manifest_samples(&kv)?;
    kv.finish()?;

    let train = manifest.load_samples(&root, Split::Train)?;
    let val = manifest.load_samples(&root, Split::Val)?;
    if train.is_empty() && train_cfg.epochs > 0 {
        return Err(Error::Invalid("the manifest has no training samples".into()));
    }
    let network = Network::init(model, train_cfg.seed)?;
    let epochs = train_cfg.epochs;
    let mut trainer = Trainer::new(network, train_cfg)?;
    let mut history = crate::nn::History::default();
    for _ in 0..epochs {
        let s = trainer.run_epoch(&train, &val, &policy)?;
        eprintln!(
            "epoch {:>3}: train loss {:.4} acc {:.4} | val loss {:.4} acc {:.4}",
            s.epoch, s.train_loss, s.train_acc, s.val_loss, s.val_acc
        );
        history.epochs.push(s);
    }
    create_dir(&common.out)?;
    save_checkpoint(&Checkpoint::from_trainer(&trainer), &common.out.join(CHECKPOINT_FILE))?;
    write_file(&common.out.join(HISTORY_FILE), history.to_csv())
}

pub fn cmd_evaluate(common: &Common) -> Result<()> {
    reject(common, "evaluate", true, false, false)?;
    let kv = load_config(common)?;
    let network = load_checkpoint(&kv.require_path("checkpoint")?)?.network()?;
    let (manifest, root) = manifest_samples(&kv)?;
    let split: Split = kv.get_or("split", Split::Val)?;
    let positive = match common.positive_class {
        Some(p) => {
            kv.get::<Label>("positive_class")?;
            p
        }
        None => kv.get_or("positive_class", Label::Star)?,
    };
    let both = kv.get_bool("both_conventions", false)?;
    let t = threshold(common, &kv)?;
    kv.finish()?;

    let samples = manifest.load_samples(&root, split)?;
    let scores = predict_all(&network, &samples)?;
    let labels: Vec<Label> = samples.iter().map(|s| s.label).collect();
    let report = MetricsReport::compute(&scores, &labels, t, positive)?;
    let mut text = format!("split={split}\n{}", report.to_text(""));
    if both {
        for p in [Label::Star, Label::Artefact] {
            let r = MetricsReport::compute(&scores, &labels, t, p)?;
            text.push_str(&r.to_text(&format!("positive_{p}.")));
        }
    }
    create_dir(&common.out)?;
    write_file(&common.out.join(METRICS_FILE), &text)?;
    write_file(&common.out.join(ROC_FILE), report.roc_csv())?;
    write_file(&common.out.join(HISTOGRAM_FILE), report.histogram_csv())?;
    let mut csv = String::from("path,label,p_star\n");
    for (e, p) in manifest.split(split).zip(&scores) {
        csv.push_str(&format!("{},{},{p:.6}\n", e.path, e.label.target()));
    }
    write_file(&common.out.join(SCORES_FILE), csv)?;
    eprint!("{}", report.to_text(""));
    Ok(())
}

pub fn cmd_classify(common: &Common) -> Result<()> {
    reject(common, "classify", true, false, true)?;
    let kv = load_config(common)?;
    let network = load_checkpoint(&kv.require_path("checkpoint")?)?.network()?;
    let frame = read_frame(&kv.require_path("frame")?)?;
    let sources = read_catalog(&kv.require_path("catalog")?)?;
    let mask = match kv.path("mask")? {
        Some(p) => MaskSpec::load(&p)?,
        None => MaskSpec::empty(),
    };
    let t = threshold(common, &kv)?;
    kv.finish()?;

    mask.validate(frame.shape()[1], frame.shape()[0])?;
    let rows = classify_frame(&network, &frame, &sources, &mask, t)?;
    if let Some(dir) = common.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_file(&common.out, report_csv(&rows))?;
    eprintln!("{}", summarize(&rows));
    Ok(())
}

/// Which class the saliency maps explain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Class(Label),
    /// The class the model predicts for each cutout.
    Predicted,
}

pub fn cmd_saliency(common: &Common) -> Result<()> {
    reject(common, "saliency", true, false, true)?;
    let kv = load_config(common)?;
    let network = load_checkpoint(&kv.require_path("checkpoint")?)?.network()?;
    let mut inputs: Vec<PathBuf> = kv.get_all("cutout").iter().map(|p| kv.resolve(p)).collect();
    if let Some(dir) = kv.path("cutout_dir")? {
        let mut found: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
            .collect();
        found.sort();
        inputs.extend(found);
    }
    let target = match kv.get_str("target")? {
        None | Some("predicted") => Target::Predicted,
        Some(v) => Target::Class(v.parse().map_err(|_| {
            Error::Config(format!("target: expected star, artefact or predicted, got `{v}`"))
        })?),
    };
    let t = threshold(common, &kv)?;
    kv.finish()?;

    create_dir(&common.out)?;
    for path in &inputs {
        let pixels = normalize(&read_cutout(path)?);
        let label = match target {
            Target::Class(l) => l,
            Target::Predicted if network.predict(&pixels)? >= t => Label::Star,
            Target::Predicted => Label::Artefact,
        };
        let map = saliency_map(&network, &pixels, label)?;
        let name = path
            .file_name()
            .ok_or_else(|| Error::Config(format!("{} has no file name", path.display())))?;
        write_saliency_pgm(&map, &common.out.join(name))?;
    }
    eprintln!("{} saliency maps -> {}", inputs.len(), common.out.display());
    Ok(())
}
