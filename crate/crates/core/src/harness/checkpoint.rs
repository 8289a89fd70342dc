//! Model checkpoints.
//!
//! # Layout
//!
//! All integers little-endian, floats IEEE-754 binary64 little-endian.
//!
//! ```text
//! magic          8 bytes   "CRCKPT\0\0"
//! version        u32       1
//! meta_len       u64
//! meta           meta_len bytes of JSON: {"config": RunConfig, "vocab_units": [..]}
//! tensor_count   u64
//! tensor × tensor_count:
//!   name_len     u32
//!   name         UTF-8
//!   ndim         u32
//!   dims         ndim × u64
//!   values       prod(dims) × f64, row-major
//! has_optimizer  u8 (0 or 1)
//! optimizer (if present):
//!   step         u64
//!   lr, beta1, beta2, epsilon   4 × f64
//!   first moment then second moment of every tensor, in table order,
//!   each prod(dims) × f64
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::binio::{put_f64s, put_string, put_u32, put_u64, Cursor};
use super::config::RunConfig;
use super::model::ChangeModel;
use crate::diff::Vocab;
use crate::error::{Error, Result};
use crate::nn::{OptimizerState, Tensor};

const MAGIC: &[u8; 8] = b"CRCKPT\0\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Meta {
    config: RunConfig,
    vocab_units: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub vocab_units: Vec<String>,
    pub tensors: Vec<(String, Tensor)>,
    pub optimizer: Option<OptimizerState>,
}

impl Checkpoint {
    pub fn from_model(model: &ChangeModel, optimizer: Option<&OptimizerState>) -> Self {
        Self {
            config: model.config.clone(),
            vocab_units: model.vocab.units().to_vec(),
            tensors: model.store.iter().map(|(n, t)| (n.to_string(), t.clone())).collect(),
            optimizer: optimizer.cloned(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, CHECKPOINT_VERSION);
        let meta = serde_json::to_vec(&Meta {
            config: self.config.clone(),
            vocab_units: self.vocab_units.clone(),
        })?;
        put_u64(&mut out, meta.len() as u64);
        out.extend_from_slice(&meta);
        put_u64(&mut out, self.tensors.len() as u64);
        for (name, t) in &self.tensors {
            put_string(&mut out, name);
            put_u32(&mut out, t.shape().len() as u32);
            for &d in t.shape() {
                put_u64(&mut out, d as u64);
            }
            put_f64s(&mut out, t.data());
        }
        match &self.optimizer {
            None => out.push(0),
            Some(opt) => {
                if opt.first_moment.len() != self.tensors.len() || opt.second_moment.len() != self.tensors.len() {
                    return Err(Error::DimensionMismatch("optimizer moments do not match the tensor table".into()));
                }
                out.push(1);
                put_u64(&mut out, opt.step);
                put_f64s(&mut out, &[opt.learning_rate, opt.beta1, opt.beta2, opt.epsilon]);
                for moments in [&opt.first_moment, &opt.second_moment] {
                    for (m, (name, t)) in moments.iter().zip(&self.tensors) {
                        if m.shape() != t.shape() {
                            return Err(Error::DimensionMismatch(format!("optimizer moment shape for `{name}`")));
                        }
                        put_f64s(&mut out, m.data());
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor::new(bytes, "checkpoint");
        if cur.take(8)? != MAGIC {
            return Err(cur.corrupted("bad magic"));
        }
        let version = cur.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Version {
                what: "checkpoint",
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let meta_len = cur.len_u64()?;
        let meta: Meta = serde_json::from_slice(cur.take(meta_len)?).map_err(|e| cur.corrupted(format!("metadata: {e}")))?;
        let count = cur.len_u64()?;
        let mut tensors = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let name = cur.string()?;
            let ndim = cur.u32()? as usize;
            if ndim > 8 {
                return Err(cur.corrupted(format!("tensor `{name}` has {ndim} dims")));
            }
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                shape.push(cur.len_u64()?);
            }
            let n = shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| cur.corrupted("tensor size overflow"))?;
            tensors.push((name, Tensor::new(shape, cur.f64s(n)?)));
        }
        let optimizer = match cur.take(1)?[0] {
            0 => None,
            1 => {
                let step = cur.u64()?;
                let h = cur.f64s(4)?;
                let mut moments = [Vec::new(), Vec::new()];
                for m in &mut moments {
                    for (_, t) in &tensors {
                        m.push(Tensor::new(t.shape().to_vec(), cur.f64s(t.len())?));
                    }
                }
                let [first_moment, second_moment] = moments;
                Some(OptimizerState {
                    learning_rate: h[0],
                    beta1: h[1],
                    beta2: h[2],
                    epsilon: h[3],
                    step,
                    first_moment,
                    second_moment,
                })
            }
            other => return Err(cur.corrupted(format!("optimizer flag {other}"))),
        };
        if !cur.is_done() {
            return Err(cur.corrupted("trailing bytes"));
        }
        Ok(Self {
            config: meta.config,
            vocab_units: meta.vocab_units,
            tensors,
            optimizer,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Rebuilds the model this checkpoint was saved from.
    pub fn to_model(&self) -> Result<ChangeModel> {
        self.load_into(&self.config)
    }

    /// Builds a model for `config` and fills it from the checkpoint; every
    /// parameter must be present with the shape `config` implies.
    pub fn load_into(&self, config: &RunConfig) -> Result<ChangeModel> {
        let vocab = Vocab::from_units(self.vocab_units.iter().cloned());
        let mut model = ChangeModel::new(config.clone(), vocab)?;
        if model.store.len() != self.tensors.len() {
            return Err(Error::DimensionMismatch(format!(
                "checkpoint has {} tensors, config implies {}",
                self.tensors.len(),
                model.store.len()
            )));
        }
        for (name, t) in &self.tensors {
            let id = model
                .store
                .id(name)
                .ok_or_else(|| Error::DimensionMismatch(format!("unexpected tensor `{name}`")))?;
            let slot = model.store.get_mut(id);
            if slot.shape() != t.shape() {
                return Err(Error::DimensionMismatch(format!(
                    "tensor `{name}`: checkpoint shape {:?}, config shape {:?}",
                    t.shape(),
                    slot.shape()
                )));
            }
            *slot = t.clone();
        }
        Ok(model)
    }
}
