//! Self-describing tensor container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       8     magic "CGANCKPT"
//! 8       4     format version (u32, currently 1)
//! 12      8     metadata length L (u64)
//! 20      L     metadata, UTF-8 JSON object
//! 20+L    4     tensor count N (u32)
//! then N records:
//!         4     name length (u32), followed by the UTF-8 name
//!         4     rank r (u32, 1..=8)
//!         8*r   extents (u64 each, all ≥ 1)
//!         8*n   values (f64 each, n = product of extents), row-major
//! ```
//!
//! Trailing bytes after the last record are rejected. Model checkpoints
//! store `fc{i}.weight` / `fc{i}.bias` plus their Adam moments as
//! `<name>.adam_m` / `<name>.adam_v`; the metadata holds the architecture,
//! the run seed, the training step and per-parameter Adam step counts.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adam::{AdamHyper, AdamState};
use crate::error::{Error, Result};
use crate::models::{Architecture, ModelParams, ParamEntry};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 8] = b"CGANCKPT";
pub const VERSION: u32 = 1;
const MAX_RANK: u32 = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub meta: serde_json::Value,
    pub tensors: Vec<(String, Tensor)>,
}

impl Container {
    pub fn new(meta: serde_json::Value) -> Self {
        Container {
            meta,
            tensors: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, t: Tensor) {
        self.tensors.push((name.into(), t));
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn take(&mut self, name: &str) -> Result<Tensor> {
        let at = self
            .tensors
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| Error::Input(format!("container has no tensor {name:?}")))?;
        Ok(self.tensors.remove(at).1)
    }

    pub fn encode(&self) -> Vec<u8> {
        let meta = serde_json::to_vec(&self.meta).expect("JSON values always serialize");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(8, "magic")?;
        if magic != MAGIC {
            return Err(Error::parse(0, format!("bad magic {magic:02x?}, expected \"CGANCKPT\"")));
        }
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(Error::parse(8, format!("unsupported version {version}, expected {VERSION}")));
        }
        let meta_len = r.u64("metadata length")?;
        let meta_at = r.pos;
        let meta_bytes = r.take_u64(meta_len, "metadata")?;
        let meta: serde_json::Value = serde_json::from_slice(meta_bytes)
            .map_err(|e| Error::parse(meta_at, format!("metadata is not JSON: {e}")))?;
        let count = r.u32("tensor count")?;
        let mut tensors = Vec::new();
        for i in 0..count {
            let at = r.pos;
            let name_len = r.u32("name length")?;
            let name = std::str::from_utf8(r.take_u64(u64::from(name_len), "name")?)
                .map_err(|_| Error::parse(at, format!("tensor {i} name is not UTF-8")))?
                .to_string();
            let rank_at = r.pos;
            let rank = r.u32("rank")?;
            if rank == 0 || rank > MAX_RANK {
                return Err(Error::parse(rank_at, format!("tensor {name:?} has rank {rank}")));
            }
            let mut shape = Vec::with_capacity(rank as usize);
            let mut n: u64 = 1;
            for _ in 0..rank {
                let dim_at = r.pos;
                let d = r.u64("extent")?;
                n = n
                    .checked_mul(d)
                    .filter(|&n| d > 0 && n <= usize::MAX as u64 / 8)
                    .ok_or_else(|| Error::parse(dim_at, format!("tensor {name:?} has bad extent {d}")))?;
                shape.push(d as usize);
            }
            let data_at = r.pos;
            let raw = r.take_u64(n * 8, "tensor values")?;
            let data: Vec<f64> = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect();
            let t = Tensor::new(shape, data)
                .map_err(|e| Error::parse(data_at, format!("tensor {name:?}: {e}")))?;
            tensors.push((name, t));
        }
        if r.pos != bytes.len() {
            return Err(Error::parse(r.pos, format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Container { meta, tensors })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::parse(
                self.pos,
                format!("truncated {what}: need {n} bytes, {} left", self.bytes.len() - self.pos),
            )
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn take_u64(&mut self, n: u64, what: &str) -> Result<&'a [u8]> {
        let n = usize::try_from(n).map_err(|_| Error::parse(self.pos, format!("{what} length {n} too large")))?;
        self.take(n, what)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

/// Metadata of a model checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub architecture: Architecture,
    pub seed: u64,
    /// Training steps completed when the checkpoint was written.
    pub step: u64,
    pub label_names: Vec<String>,
    pub adam_hyper: AdamHyper,
    pub adam_steps: Vec<u64>,
    /// Free-form provenance (dataset name, loss mode, ...).
    #[serde(default)]
    pub notes: serde_json::Map<String, serde_json::Value>,
}

/// Architecture, parameters and optimizer state of one network.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelCheckpoint {
    pub architecture: Architecture,
    pub params: ModelParams,
    pub seed: u64,
    pub step: u64,
    pub label_names: Vec<String>,
    pub notes: serde_json::Map<String, serde_json::Value>,
}

impl ModelCheckpoint {
    pub fn to_container(&self) -> Container {
        let entries = self.params.entries();
        let meta = ModelMeta {
            architecture: self.architecture.clone(),
            seed: self.seed,
            step: self.step,
            label_names: self.label_names.clone(),
            adam_hyper: entries.first().map(|e| e.adam.hyper).unwrap_or_default(),
            adam_steps: entries.iter().map(|e| e.adam.step).collect(),
            notes: self.notes.clone(),
        };
        let mut c = Container::new(serde_json::to_value(&meta).expect("metadata serializes"));
        for e in entries {
            c.push(e.name.clone(), e.value.clone());
        }
        for e in entries {
            c.push(format!("{}.adam_m", e.name), e.adam.m.clone());
            c.push(format!("{}.adam_v", e.name), e.adam.v.clone());
        }
        c
    }

    pub fn from_container(mut c: Container) -> Result<Self> {
        let meta: ModelMeta = serde_json::from_value(c.meta.clone())
            .map_err(|e| Error::Input(format!("not a model checkpoint: {e}")))?;
        meta.adam_hyper.validate()?;
        let dims = meta.architecture.layer_dims();
        if meta.adam_steps.len() != 2 * dims.len() {
            return Err(Error::Input(format!(
                "checkpoint lists {} Adam step counts for {} parameters",
                meta.adam_steps.len(),
                2 * dims.len()
            )));
        }
        let mut entries = Vec::with_capacity(2 * dims.len());
        for (i, &(fan_in, fan_out)) in dims.iter().enumerate() {
            for (j, (suffix, shape)) in [("weight", vec![fan_in, fan_out]), ("bias", vec![fan_out])]
                .into_iter()
                .enumerate()
            {
                let name = format!("fc{i}.{suffix}");
                let value = c.take(&name)?;
                let m = c.take(&format!("{name}.adam_m"))?;
                let v = c.take(&format!("{name}.adam_v"))?;
                for t in [&value, &m, &v] {
                    if t.shape() != shape.as_slice() {
                        return Err(Error::dim("checkpoint parameter", &shape, t.shape()));
                    }
                }
                entries.push(ParamEntry {
                    name,
                    value,
                    adam: AdamState {
                        step: meta.adam_steps[2 * i + j],
                        m,
                        v,
                        hyper: meta.adam_hyper,
                    },
                });
            }
        }
        if let Some((name, _)) = c.tensors.first() {
            return Err(Error::Input(format!("unexpected tensor {name:?} in checkpoint")));
        }
        Ok(ModelCheckpoint {
            architecture: meta.architecture,
            params: ModelParams::from_entries(entries),
            seed: meta.seed,
            step: meta.step,
            label_names: meta.label_names,
            notes: meta.notes,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_container().write(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_container(Container::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::models::{GeneratorArch, NetworkSpec, OutputHead};
    use crate::rng::RngStream;

    #[test]
    fn container_round_trip() {
        let mut c = Container::new(serde_json::json!({"a": 1}));
        c.push("x", Tensor::new(vec![2, 1], vec![1.5, -0.25]).unwrap());
        c.push("y", Tensor::scalar(3.0));
        let bytes = c.encode();
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(Container::decode(&bytes).unwrap(), c);
    }

    #[test]
    fn rejects_truncation_and_trailing_bytes() {
        let mut c = Container::new(serde_json::json!({}));
        c.push("x", Tensor::vector(&[1.0, 2.0]).unwrap());
        let bytes = c.encode();
        for cut in 0..bytes.len() {
            assert!(matches!(Container::decode(&bytes[..cut]), Err(Error::Parse { .. })), "cut {cut}");
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(Container::decode(&extra), Err(Error::Parse { .. })));
    }

    #[test]
    fn rejects_zero_extent_and_nan() {
        let mut c = Container::new(serde_json::json!({}));
        c.push("x", Tensor::vector(&[1.0]).unwrap());
        let mut bytes = c.encode();
        let n = bytes.len();
        bytes[n - 16..n - 8].copy_from_slice(&0u64.to_le_bytes());
        assert!(Container::decode(&bytes).is_err());

        let mut bytes = c.encode();
        bytes[n - 8..].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(Container::decode(&bytes).is_err());
    }

    #[test]
    fn model_checkpoint_round_trip() {
        let spec = NetworkSpec::new(vec![5], Activation::Relu, OutputHead::Tanh).unwrap();
        let arch = GeneratorArch::new(3, 2, [1, 1, 2], spec).unwrap();
        let params = ModelParams::init(&arch.layer_dims(), AdamHyper::default(), &mut RngStream::new(1)).unwrap();
        let ck = ModelCheckpoint {
            architecture: Architecture::Generator(arch),
            params,
            seed: 42,
            step: 7,
            label_names: vec!["a".into(), "b".into()],
            notes: Default::default(),
        };
        let back = ModelCheckpoint::from_container(Container::decode(&ck.to_container().encode()).unwrap()).unwrap();
        assert_eq!(back, ck);
    }
}
