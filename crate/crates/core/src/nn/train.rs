//! Minibatch training with Adam, binary cross-entropy and on-the-fly
//! augmentation.
//!
//! All randomness is derived from `TrainConfig::seed`: the per-epoch sample
//! order from `(seed, epoch)`, each augmentation draw from
//! `(seed, epoch, draw)`, and dropout from one generator whose state is
//! carried in checkpoints. Training is sequential, so a given seed, dataset
//! and configuration always produce the same weights.

use rand::seq::SliceRandom;

use super::adam::{AdamConfig, AdamState};
use super::loss::bce_loss;
use super::network::{stack, Mode, Network};
use super::rng::{derived, Purpose, Rng, RngState};
use crate::config::KeyValues;
use crate::data::augment::{augment, augment_rng, AugmentPolicy};
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Decision threshold used for accuracy.
pub const THRESHOLD: f64 = 0.5;

const EVAL_CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// `None` means one pass over the training set: `floor(n / batch_size)`.
    pub steps_per_epoch: Option<usize>,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 4,
            epochs: 100,
            steps_per_epoch: None,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }

    /// Steps per epoch for a training set of `n` samples. Each epoch draws
    /// every sample at most once.
    pub fn steps_for(&self, n: usize) -> Result<usize> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        let capacity = n / self.batch_size;
        match self.steps_per_epoch {
            None => Ok(capacity.max(1)),
            Some(s) if s * self.batch_size <= n.max(self.batch_size) => Ok(s),
            Some(s) => Err(Error::Config(format!(
                "steps_per_epoch {s} × batch_size {} exceeds the {n} training samples",
                self.batch_size
            ))),
        }
    }

    pub fn to_text(&self) -> String {
        let steps = self
            .steps_per_epoch
            .map_or_else(|| "auto".to_string(), |s| s.to_string());
        format!(
            "train.learning_rate={}\ntrain.batch_size={}\ntrain.epochs={}\ntrain.steps_per_epoch={steps}\n\
             train.seed={}\ntrain.adam_beta1={}\ntrain.adam_beta2={}\ntrain.adam_epsilon={}\n",
            self.learning_rate,
            self.batch_size,
            self.epochs,
            self.seed,
            self.adam_beta1,
            self.adam_beta2,
            self.adam_epsilon
        )
    }

    /// Reads `train.*` keys; missing keys keep their defaults.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let d = Self::default();
        let steps_per_epoch = match kv.get_str("train.steps_per_epoch")? {
            None | Some("auto") => None,
            Some(v) => Some(
                v.parse()
                    .map_err(|_| Error::Config(format!("train.steps_per_epoch: bad value `{v}`")))?,
            ),
        };
        let cfg = Self {
            learning_rate: kv.get_or("train.learning_rate", d.learning_rate)?,
            batch_size: kv.get_or("train.batch_size", d.batch_size)?,
            epochs: kv.get_or("train.epochs", d.epochs)?,
            steps_per_epoch,
            seed: kv.get_or("train.seed", d.seed)?,
            adam_beta1: kv.get_or("train.adam_beta1", d.adam_beta1)?,
            adam_beta2: kv.get_or("train.adam_beta2", d.adam_beta2)?,
            adam_epsilon: kv.get_or("train.adam_epsilon", d.adam_epsilon)?,
        };
        if !(cfg.learning_rate > 0.0) || cfg.batch_size == 0 {
            return Err(Error::Config("learning_rate and batch_size must be positive".into()));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 1-based epoch number.
    pub epoch: u64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochStats>,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
        for e in &self.epochs {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                e.epoch, e.train_loss, e.train_acc, e.val_loss, e.val_acc
            ));
        }
        s
    }

    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }
}

/// Owns a network plus optimizer state and advances it epoch by epoch.
#[derive(Debug, Clone)]
pub struct Trainer {
    network: Network,
    adam: AdamState,
    cfg: TrainConfig,
    epochs_done: u64,
    dropout_rng: Rng,
}

impl Trainer {
    pub fn new(network: Network, cfg: TrainConfig) -> Result<Self> {
        check_head(&network)?;
        let adam = AdamState::zeros_like(network.params());
        let dropout_rng = derived(cfg.seed, Purpose::Dropout, 0);
        Ok(Self {
            network,
            adam,
            cfg,
            epochs_done: 0,
            dropout_rng,
        })
    }

    /// Continues from saved state.
    pub fn resume(
        network: Network,
        adam: AdamState,
        cfg: TrainConfig,
        epochs_done: u64,
        rng: RngState,
    ) -> Result<Self> {
        check_head(&network)?;
        if adam.first.len() != network.params().len() || adam.second.len() != network.params().len() {
            return Err(Error::shape("Trainer::resume", "optimizer state does not match network"));
        }
        Ok(Self {
            network,
            adam,
            cfg,
            epochs_done,
            dropout_rng: rng.restore(),
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn into_network(self) -> Network {
        self.network
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn epochs_done(&self) -> u64 {
        self.epochs_done
    }

    pub fn rng_state(&self) -> RngState {
        RngState::capture(&self.dropout_rng)
    }

    /// Runs `epochs` more epochs, returning one history row per epoch.
    pub fn fit(&mut self, train: &[Sample], val: &[Sample], policy: &AugmentPolicy, epochs: usize) -> Result<History> {
        let mut history = History::default();
        for _ in 0..epochs {
            history.epochs.push(self.run_epoch(train, val, policy)?);
        }
        Ok(history)
    }

    pub fn run_epoch(&mut self, train: &[Sample], val: &[Sample], policy: &AugmentPolicy) -> Result<EpochStats> {
        if train.is_empty() {
            return Err(Error::Invalid("training set is empty".into()));
        }
        let n = train.len();
        let bs = self.cfg.batch_size;
        let steps = self.cfg.steps_for(n)?;
        let epoch = self.epochs_done;
        let seed = self.cfg.seed;
        let adam_cfg = self.cfg.adam();

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut derived(seed, Purpose::Shuffle, epoch));

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for step in 0..steps {
            let mut images = Vec::with_capacity(bs);
            let mut targets = Vec::with_capacity(bs);
            for j in 0..bs {
                let draw = step * bs + j;
                let sample = &train[order[draw % n]];
                let mut rng = augment_rng(seed, epoch, draw as u64);
                images.push(augment(&sample.pixels, &mut rng, policy));
                targets.push(sample.label.target());
            }
            let refs: Vec<&Tensor> = images.iter().collect();
            let batch = stack(&refs)?;
            let depth = self.network.config().layers.len();
            let trace = self
                .network
                .forward_trace(&batch, Mode::Train(&mut self.dropout_rng), depth)?;
            let mut grad = vec![0.0; bs];
            for (k, (&p, &y)) in trace.output.data().iter().zip(&targets).enumerate() {
                let (l, g) = bce_loss(p, y)?;
                if !l.is_finite() || !p.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "loss at epoch {} step {} (sample {k}) is {l}",
                        epoch + 1,
                        step + 1
                    )));
                }
                loss_sum += l;
                grad[k] = g / bs as f64;
                correct += usize::from((p >= THRESHOLD) == (y == 1.0));
            }
            let grad = Tensor::new(trace.output.shape().to_vec(), grad)?;
            let (grads, _) = self.network.backward(&trace, &grad, false)?;
            self.adam.step(self.network.params_mut(), &grads, &adam_cfg)?;
        }
        self.epochs_done += 1;

        let seen = (steps * bs) as f64;
        let (val_loss, val_acc) = if val.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let e = evaluate(&self.network, val)?;
            (e.loss, e.accuracy)
        };
        Ok(EpochStats {
            epoch: self.epochs_done,
            train_loss: loss_sum / seen,
            train_acc: correct as f64 / seen,
            val_loss,
            val_acc,
        })
    }
}

fn check_head(network: &Network) -> Result<()> {
    let out = network.config().output_shape()?;
    if out != [1] {
        return Err(Error::shape("train", format!("network must end in one output, got {out:?}")));
    }
    Ok(())
}

/// Trains a fresh optimizer state for `cfg.epochs` epochs.
pub fn train(
    network: Network,
    train_set: &[Sample],
    val_set: &[Sample],
    policy: &AugmentPolicy,
    cfg: &TrainConfig,
) -> Result<(Network, History)> {
    let mut trainer = Trainer::new(network, cfg.clone())?;
    let history = trainer.fit(train_set, val_set, policy, cfg.epochs)?;
    Ok((trainer.into_network(), history))
}

/// Loss, accuracy and raw scores of a network on un-augmented samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub scores: Vec<f64>,
}

pub fn predict_all(network: &Network, samples: &[Sample]) -> Result<Vec<f64>> {
    let mut scores = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(EVAL_CHUNK) {
        let refs: Vec<&Tensor> = chunk.iter().map(|s| &s.pixels).collect();
        let out = network.forward(&stack(&refs)?, Mode::Eval)?;
        scores.extend_from_slice(out.data());
    }
    Ok(scores)
}

pub fn evaluate(network: &Network, samples: &[Sample]) -> Result<Evaluation> {
    let scores = predict_all(network, samples)?;
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (&p, s) in scores.iter().zip(samples) {
        let y = s.label.target();
        loss += bce_loss(p, y)?.0;
        correct += usize::from((p >= THRESHOLD) == (y == 1.0));
    }
    let n = samples.len().max(1) as f64;
    Ok(Evaluation {
        loss: loss / n,
        accuracy: correct as f64 / n,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_hyperparameters() {
        let cfg = TrainConfig::default();
        assert_eq!((cfg.batch_size, cfg.epochs, cfg.learning_rate), (4, 100, 0.001));
        assert_eq!(cfg.steps_for(1408).unwrap(), 352);
    }

    #[test]
    fn step_budget_is_checked() {
        let cfg = TrainConfig {
            steps_per_epoch: Some(100),
            ..TrainConfig::default()
        };
        assert!(cfg.steps_for(200).is_err());
        assert_eq!(cfg.steps_for(400).unwrap(), 100);
    }

    #[test]
    fn text_round_trip() {
        let cfg = TrainConfig {
            seed: 77,
            steps_per_epoch: Some(3),
            learning_rate: 0.0125,
            ..TrainConfig::default()
        };
        let kv = KeyValues::parse(&cfg.to_text()).unwrap();
        assert_eq!(TrainConfig::from_kv(&kv).unwrap(), cfg);
        kv.finish().unwrap();
    }
}
