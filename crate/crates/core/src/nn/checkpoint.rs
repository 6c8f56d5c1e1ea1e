//! Binary checkpoints.
//!
//! Layout (integers little-endian):
//!
//! ```text
//! "RPCK"  u32 version  u32 text_len  text[text_len]
//! f64 × P  parameters, layer declaration order, weights then bias
//! f64 × P  Adam first moments, same order
//! f64 × P  Adam second moments, same order
//! u64      CRC-64/XZ of every preceding byte
//! ```
//!
//! The text block is `key=value` lines echoing the model and training
//! configuration plus the resumable state (epochs done, optimizer step,
//! dropout generator position).

use std::path::Path;

use crc::{Crc, CRC_64_XZ};

use super::adam::AdamState;
use super::model::ModelConfig;
use super::network::Network;
use super::rng::RngState;
use super::train::{TrainConfig, Trainer};
use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"RPCK";
pub const VERSION: u32 = 1;
const CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub params: Vec<Tensor>,
    pub adam: AdamState,
    pub epochs_done: u64,
    pub rng: RngState,
}

impl Checkpoint {
    pub fn from_trainer(trainer: &Trainer) -> Self {
        Self {
            model: trainer.network().config().clone(),
            train: trainer.config().clone(),
            params: trainer.network().params().to_vec(),
            adam: trainer.adam().clone(),
            epochs_done: trainer.epochs_done(),
            rng: trainer.rng_state(),
        }
    }

    pub fn network(&self) -> Result<Network> {
        Network::new(self.model.clone(), self.params.clone())
    }

    pub fn into_trainer(self) -> Result<Trainer> {
        let network = Network::new(self.model, self.params)?;
        Trainer::resume(network, self.adam, self.train, self.epochs_done, self.rng)
    }

    fn header_text(&self) -> String {
        let seed_hex: String = self.rng.seed.iter().map(|b| format!("{b:02x}")).collect();
        format!(
            "format=artefact-net-checkpoint\n{}{}state.epochs_done={}\nstate.adam_step={}\n\
             state.rng_seed={seed_hex}\nstate.rng_stream={}\nstate.rng_word_pos={}\n",
            self.model.to_text(),
            self.train.to_text(),
            self.epochs_done,
            self.adam.step,
            self.rng.stream,
            self.rng.word_pos
        )
    }

    pub fn encode(&self) -> Vec<u8> {
        let text = self.header_text();
        let n: usize = self.params.iter().map(Tensor::len).sum();
        let mut out = Vec::with_capacity(20 + text.len() + 24 * n);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(text.len() as u32).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
        for group in [&self.params, &self.adam.first, &self.adam.second] {
            for t in group.iter() {
                for v in t.data() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        let crc = CRC64.checksum(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 20 {
            return Err(Error::Corrupt(format!("truncated: only {} bytes", bytes.len())));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Corrupt("bad magic (not a checkpoint file)".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(Error::Corrupt(format!("unsupported format version {version} (expected {VERSION})")));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
        if CRC64.checksum(body) != stored {
            return Err(Error::Corrupt("checksum mismatch (truncated or damaged file)".into()));
        }
        let text_len = u32::from_le_bytes(body[8..12].try_into().expect("4 bytes")) as usize;
        let text = body
            .get(12..12 + text_len)
            .ok_or_else(|| Error::Corrupt("configuration block runs past end of file".into()))?;
        let text = std::str::from_utf8(text).map_err(|_| Error::Corrupt("configuration is not UTF-8".into()))?;
        let kv = KeyValues::parse(text).map_err(|e| Error::Corrupt(e.to_string()))?;
        if kv.get_str("format")? != Some("artefact-net-checkpoint") {
            return Err(Error::Corrupt("missing format marker".into()));
        }
        let model = ModelConfig::from_kv(&kv)?;
        let train = TrainConfig::from_kv(&kv)?;
        let state = |key: &str| -> Result<String> {
            kv.get_str(key)?
                .map(str::to_string)
                .ok_or_else(|| Error::Corrupt(format!("missing `{key}`")))
        };
        let parse_u = |key: &str| -> Result<u128> {
            state(key)?
                .parse()
                .map_err(|_| Error::Corrupt(format!("bad `{key}`")))
        };
        let epochs_done = parse_u("state.epochs_done")? as u64;
        let adam_step = parse_u("state.adam_step")? as u64;
        let seed_hex = state("state.rng_seed")?;
        let mut seed = [0u8; 32];
        if seed_hex.len() != 64 {
            return Err(Error::Corrupt("bad `state.rng_seed`".into()));
        }
        for (i, b) in seed.iter_mut().enumerate() {
            *b = u8::from_str_radix(&seed_hex[2 * i..2 * i + 2], 16)
                .map_err(|_| Error::Corrupt("bad `state.rng_seed`".into()))?;
        }
        let rng = RngState {
            seed,
            stream: parse_u("state.rng_stream")? as u64,
            word_pos: parse_u("state.rng_word_pos")?,
        };
        kv.finish().map_err(|e| Error::Corrupt(e.to_string()))?;

        let shapes: Vec<Vec<usize>> = model
            .param_shapes()?
            .into_iter()
            .flatten()
            .flat_map(|p| [p.weights, p.bias])
            .collect();
        let count: usize = shapes.iter().map(|s| s.iter().product::<usize>()).sum();
        let payload = &body[12 + text_len..];
        if payload.len() != 3 * count * 8 {
            return Err(Error::Corrupt(format!(
                "weight payload holds {} values but the configuration needs {}",
                payload.len() / 8,
                3 * count
            )));
        }
        let mut floats = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let mut group = || -> Vec<Tensor> {
            shapes
                .iter()
                .map(|s| {
                    let n = s.iter().product();
                    Tensor::new(s.clone(), floats.by_ref().take(n).collect()).expect("length checked")
                })
                .collect()
        };
        let params = group();
        let first = group();
        let second = group();
        Ok(Self {
            model,
            train,
            params,
            adam: AdamState {
                first,
                second,
                step: adam_step,
            },
            epochs_done,
            rng,
        })
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<()> {
    std::fs::write(path, checkpoint.encode()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::decode(&bytes)
}
