//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes  "GIDNCKPT"
//! version    u32      1
//! meta_len   u64      length of the JSON metadata block
//! meta       bytes    {"model": ModelConfig, "run_config": string|null, "seed": u64|null}
//! n_tensors  u32
//! tensor*    name_len u16, name utf-8, ndim u8, dims u64*ndim, data f64*prod(dims)
//! rng        seed [u8; 32], stream u64, word_pos u128
//! ```
//!
//! Tensors appear in [`ModelParams::groups`] order. Values are stored as raw
//! IEEE-754 bits, so save/load is bit-exact.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{init_params, ModelConfig, ModelParams};

const MAGIC: &[u8; 8] = b"GIDNCKPT";
pub const FORMAT_VERSION: u32 = 1;

/// Position of a ChaCha8 stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        RngState {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelConfig,
    /// Free-form echo of the run configuration that produced the weights.
    pub run_config: Option<String>,
    /// Training seed, when known.
    pub seed: Option<u64>,
    pub params: ModelParams,
    pub rng: RngState,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    model: ModelConfig,
    run_config: Option<String>,
    #[serde(default)]
    seed: Option<u64>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        let meta = serde_json::to_vec(&Meta {
            model: self.model.clone(),
            run_config: self.run_config.clone(),
            seed: self.seed,
        })
        .map_err(|e| Error::Data(e.to_string()))?;
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);

        let groups = self.params.groups();
        out.extend_from_slice(&(groups.len() as u32).to_le_bytes());
        for (name, data, shape) in groups {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(shape.len() as u8);
            for d in shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for x in data {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out.extend_from_slice(&self.rng.seed);
        out.extend_from_slice(&self.rng.stream.to_le_bytes());
        out.extend_from_slice(&self.rng.word_pos.to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Data("not a checkpoint (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Data(format!("unsupported checkpoint version {version}")));
        }
        let meta_len = r.u64()? as usize;
        let meta: Meta = serde_json::from_slice(r.take(meta_len)?).map_err(|e| Error::Data(e.to_string()))?;

        let mut params = init_params(&meta.model, 0)?;
        let count = r.u32()? as usize;
        let mut groups = params.groups_mut();
        if count != groups.len() {
            return Err(Error::Data(format!(
                "checkpoint has {count} tensors, config implies {}",
                groups.len()
            )));
        }
        for (name, dst) in groups.iter_mut() {
            let name_len = r.u16()? as usize;
            let stored = std::str::from_utf8(r.take(name_len)?).map_err(|e| Error::Data(e.to_string()))?;
            if stored != name {
                return Err(Error::Data(format!("expected tensor {name}, found {stored}")));
            }
            let ndim = r.take(1)?[0] as usize;
            let mut len = 1usize;
            for _ in 0..ndim {
                len *= r.u64()? as usize;
            }
            if len != dst.len() {
                return Err(Error::Data(format!(
                    "tensor {name} has {len} values, expected {}",
                    dst.len()
                )));
            }
            for x in dst.iter_mut() {
                *x = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
            }
        }
        drop(groups);
        let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
        let stream = r.u64()?;
        let word_pos = u128::from_le_bytes(r.take(16)?.try_into().unwrap());
        if r.pos != bytes.len() {
            return Err(Error::Data("trailing bytes after checkpoint".into()));
        }
        Ok(Checkpoint {
            model: meta.model,
            run_config: meta.run_config,
            seed: meta.seed,
            params,
            rng: RngState { seed, stream, word_pos },
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Data("truncated checkpoint".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
