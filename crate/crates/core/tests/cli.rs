mod common;

use std::path::Path;
use std::process::{Command, Output};

use artefact_net::data::catalog::read_catalog;
use artefact_net::data::{write_catalog, write_cutout, Cutout, DatasetManifest, Label, ManifestEntry, Split};
use artefact_net::nn::rng::{derived, Purpose, RngState};
use artefact_net::nn::{load_checkpoint, save_checkpoint, AdamState, Checkpoint, LayerSpec, ModelConfig, Network, TrainConfig};
use artefact_net::Tensor;

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_artefact-net")).args(args).current_dir(cwd).output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const SYNTH: &str = "seed=5\nsynth.frames=2\nscene.width=512\nscene.height=512\n";
const TINY: &str = "model.name=tiny\nmodel.input=1x64x64\n\
model.layer=conv filters=2 kernel=3 stride=1\nmodel.layer=relu\nmodel.layer=maxpool window=8\n\
model.layer=flatten\nmodel.layer=dense units=1\nmodel.layer=sigmoid\n";

fn synth(dir: &Path) {
    write(dir, "synth.cfg", SYNTH);
    ok(&run(&["synth", "--config", "synth.cfg", "--out", "ds"], dir));
}

fn checkpoint_for(model: ModelConfig, params: Vec<Tensor>) -> Checkpoint {
    Checkpoint {
        adam: AdamState::zeros_like(&params),
        model,
        train: TrainConfig::default(),
        params,
        epochs_done: 0,
        rng: RngState::capture(&derived(0, Purpose::Dropout, 0)),
    }
}

#[test]
fn missing_config_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["synth", "--config", "nowhere.cfg", "--out", "ds"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.cfg"));
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["bogus"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["synth"], dir.path()).status.code(), Some(2));
    write(dir.path(), "bad.cfg", "seed=1\nsynth.framez=3\n");
    let out = run(&["synth", "--config", "bad.cfg", "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("synth.framez"));
    let out = run(&["synth", "--config", "bad.cfg", "--out", "x", "--threshold", "0.3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_is_reproducible_and_seed_overridable() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    ok(&run(&["synth", "--config", "synth.cfg", "--out", "again"], dir.path()));
    ok(&run(&["synth", "--config", "synth.cfg", "--out", "other", "--seed", "6"], dir.path()));
    let read = |p: &str| std::fs::read_to_string(dir.path().join(p)).unwrap();
    let m = read("ds/manifest.txt");
    DatasetManifest::parse(&m).unwrap();
    assert_eq!(m, read("again/manifest.txt"));
    assert_ne!(m, read("other/manifest.txt"));
    assert!(read("other/manifest.txt").contains("seed=6"));
}

#[test]
fn train_zero_epochs_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    write(dir.path(), "zero.cfg", &format!("manifest=ds/manifest.txt\n{TINY}train.epochs=0\ntrain.seed=4\n"));
    ok(&run(&["train", "--config", "zero.cfg", "--out", "zero"], dir.path()));
    let ck = load_checkpoint(&dir.path().join("zero/model.ckpt")).unwrap();
    let init = Network::init(ck.model.clone(), 4).unwrap();
    assert_eq!(ck.params, init.params());
    assert_eq!((ck.train.batch_size, ck.train.learning_rate), (4, 0.001));
    let history = std::fs::read_to_string(dir.path().join("zero/history.csv")).unwrap();
    assert_eq!(history, "epoch,train_loss,train_acc,val_loss,val_acc\n");

    write(dir.path(), "two.cfg", &format!("manifest=ds/manifest.txt\n{TINY}train.epochs=2\ntrain.seed=4\n"));
    ok(&run(&["train", "--config", "two.cfg", "--out", "a"], dir.path()));
    ok(&run(&["train", "--config", "two.cfg", "--out", "b"], dir.path()));
    let read = |p: &str| std::fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/history.csv"), read("b/history.csv"));
    assert_eq!(read("a/model.ckpt"), read("b/model.ckpt"));
    assert_eq!(String::from_utf8(read("a/history.csv")).unwrap().lines().count(), 3);
}

#[test]
fn diverging_training_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    write(dir.path(), "boom.cfg", &format!("manifest=ds/manifest.txt\n{TINY}train.epochs=3\ntrain.learning_rate=1e308\n"));
    let out = run(&["train", "--config", "boom.cfg", "--out", "boom"], dir.path());
    assert_eq!(out.status.code(), Some(4), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

/// Bright cutouts are stars, dark ones artefacts; a one-weight model gets
/// them all right.
#[test]
fn evaluate_perfect_micro_set() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::create_dir(root.join("c")).unwrap();
    let mut entries = Vec::new();
    for i in 0..12u8 {
        let label = if i % 2 == 0 { Label::Star } else { Label::Artefact };
        let level = if label == Label::Star { 200 + i } else { 10 + i };
        let path = format!("c/f00000_s{i:06}.pgm");
        write_cutout(&Cutout::new(vec![level; 4096]).unwrap(), &root.join(&path)).unwrap();
        entries.push(ManifestEntry { path, label, split: Split::Val });
    }
    DatasetManifest { seed: 0, entries }.save(&root.join("manifest.txt")).unwrap();
    let model = ModelConfig {
        name: "mean".into(),
        input_shape: [1, 64, 64],
        layers: vec![LayerSpec::Flatten, LayerSpec::Dense { units: 1 }, LayerSpec::Sigmoid],
        expected_params: None,
    };
    let params = vec![Tensor::full(vec![1, 4096], 10.0 / 4096.0), Tensor::full(vec![1], -5.0)];
    save_checkpoint(&checkpoint_for(model, params), &root.join("m.ckpt")).unwrap();
    write(root, "eval.cfg", "checkpoint=m.ckpt\nmanifest=manifest.txt\nboth_conventions=true\n");
    ok(&run(&["evaluate", "--config", "eval.cfg", "--out", "ev"], root));
    let metrics = std::fs::read_to_string(root.join("ev/metrics.txt")).unwrap();
    for key in ["precision", "recall", "f1", "mcc", "fpr", "fnr", "auc"] {
        assert!(metrics.lines().any(|l| l.starts_with(&format!("{key}="))), "{key}");
    }
    assert!(metrics.contains("\nprecision=1.000000\n") && metrics.contains("\nrecall=1.000000\n"));
    assert!(metrics.contains("positive_artefact.precision=1.000000"));

    // the reported AUC matches the concordance oracle on the written scores
    ok(&run(&["evaluate", "--config", "eval.cfg", "--out", "ev2", "--threshold", "0.9", "--positive-class", "artefact"], root));
    let scores = std::fs::read_to_string(root.join("ev2/scores.csv")).unwrap();
    let (mut s, mut l) = (Vec::new(), Vec::new());
    for line in scores.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        l.push(if cols[1] == "1" { Label::Star } else { Label::Artefact });
        s.push(cols[2].parse::<f64>().unwrap());
    }
    let m2 = std::fs::read_to_string(root.join("ev2/metrics.txt")).unwrap();
    assert!(m2.contains("positive_class=artefact\nthreshold=0.9\n"));
    let auc: f64 = m2.lines().find_map(|l| l.strip_prefix("auc=")).unwrap().parse().unwrap();
    assert!((auc - common::concordance(&s, &l)).abs() < 1e-6);
}

#[test]
fn classify_reports_every_source_and_matches_single_runs() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    synth(root);
    write(root, "train.cfg", &format!("manifest=ds/manifest.txt\n{TINY}train.epochs=1\n"));
    ok(&run(&["train", "--config", "train.cfg", "--out", "run"], root));
    let cfg = |cat: &str| format!("checkpoint=run/model.ckpt\nframe=ds/frames/frame_00000.fits\ncatalog={cat}\nmask=ds/mask.txt\n");
    write(root, "classify.cfg", &cfg("ds/catalogs/frame_00000.cat"));
    ok(&run(&["classify", "--config", "classify.cfg", "--out", "report.csv"], root));
    let report = std::fs::read_to_string(root.join("report.csv")).unwrap();
    let rows: Vec<&str> = report.lines().skip(1).collect();
    let sources = read_catalog(&root.join("ds/catalogs/frame_00000.cat")).unwrap();
    assert_eq!(rows.len(), sources.len());
    assert!(report.starts_with("id,x,y,mag,flags,p_star,status\n"));
    assert!(rows.iter().any(|r| r.ends_with("skipped(masked)")));
    for r in &rows {
        let cols: Vec<&str> = r.split(',').collect();
        if !cols[6].starts_with("skipped") {
            let p: f64 = cols[5].parse().unwrap();
            assert!((0.0..=1.0).contains(&p));
        }
    }
    // a handful of one-source catalogs reproduce the batch rows
    for (k, s) in sources.iter().enumerate().step_by(53) {
        let name = format!("one{k}.cat");
        std::fs::write(root.join(&name), write_catalog(&[*s])).unwrap();
        write(root, "one.cfg", &cfg(&name));
        ok(&run(&["classify", "--config", "one.cfg", "--out", "one.csv"], root));
        let single = std::fs::read_to_string(root.join("one.csv")).unwrap();
        assert_eq!(single.lines().nth(1).unwrap(), rows[k]);
    }
}

#[test]
fn saliency_writes_one_map_per_cutout() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    synth(root);
    let model = artefact_net::zoo::build_variant(2).unwrap();
    let zero = Network::zeros(model.clone()).unwrap();
    save_checkpoint(&checkpoint_for(model, zero.params().to_vec()), &root.join("zero.ckpt")).unwrap();
    write(root, "sal.cfg", "checkpoint=zero.ckpt\ncutout_dir=ds/cutouts\ntarget=artefact\n");
    ok(&run(&["saliency", "--config", "sal.cfg", "--out", "maps"], root));
    let inputs = std::fs::read_dir(root.join("ds/cutouts")).unwrap().count();
    let outputs: Vec<_> = std::fs::read_dir(root.join("maps")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(outputs.len(), inputs);
    for p in outputs {
        assert!(root.join("ds/cutouts").join(p.file_name().unwrap()).exists());
        let map = artefact_net::data::read_cutout(&p).unwrap();
        assert!(map.as_bytes().iter().all(|&b| b == 0));
    }
}

#[test]
fn corrupt_checkpoint_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    std::fs::write(dir.path().join("bad.ckpt"), b"RPCK garbage").unwrap();
    write(dir.path(), "eval.cfg", "checkpoint=bad.ckpt\nmanifest=ds/manifest.txt\n");
    let out = run(&["evaluate", "--config", "eval.cfg", "--out", "ev"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}
