//! Labeled image datasets: parsers, synthetic mixtures, splits and presets.

mod cifar;
mod idx;
mod mixture;
mod presets;
mod split;

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use cifar::{
    dataset_from_cifar10, encode_cifar10, load_cifar10_binary, parse_cifar10, CifarRecord, CIFAR10_LABELS,
    CIFAR_RECORD_LEN,
};
pub use idx::{
    dataset_from_idx, encode_idx_images, encode_idx_labels, load_idx, parse_idx_images, parse_idx_labels,
    IdxImages, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC,
};
pub use mixture::{mixture_3x2_spec, synth_mixture, Component, MixtureOracle, MixtureSpec};
pub use presets::{load_preset, PresetData, PRESETS};
pub use split::{split, split_indices, SplitFractions, Splits};

use crate::checkpoint::Container;
use crate::error::{Error, Result};
use crate::graph::one_hot_indices;
use crate::models::hex;
use crate::tensor::Tensor;

/// Convention for mapping stored bytes into `[-1, 1]`.
pub const BYTE_SCALE: &str = "x/127.5 - 1 (uint8 -> [-1, 1])";

pub fn byte_to_unit(b: u8) -> f64 {
    f64::from(b) / 127.5 - 1.0
}

/// Inverse of [`byte_to_unit`] on the uint8 lattice; clamps outside values.
pub fn unit_to_byte(x: f64) -> u8 {
    ((x + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    /// SHA-256 of the source bytes (or of the generating spec).
    pub source_checksum: String,
    pub scale: String,
    pub label_names: Vec<String>,
}

/// Images `[count, h, w, d]` in `[-1, 1]` with one-hot labels `[count, m]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    images: Tensor,
    labels: Tensor,
    classes: Vec<usize>,
    meta: DatasetMeta,
}

impl LabeledDataset {
    pub fn new(images: Tensor, labels: Tensor, meta: DatasetMeta) -> Result<Self> {
        if images.rank() != 4 {
            return Err(Error::Input(format!("images must be [count,h,w,d], got {:?}", images.shape())));
        }
        if labels.rank() != 2 || labels.shape()[0] != images.shape()[0] {
            return Err(Error::dim("dataset labels", images.shape(), labels.shape()));
        }
        if labels.shape()[1] != meta.label_names.len() {
            return Err(Error::Input(format!(
                "{} label names for {} classes",
                meta.label_names.len(),
                labels.shape()[1]
            )));
        }
        if let Some(v) = images.data().iter().find(|v| v.abs() > 1.0) {
            return Err(Error::Input(format!("pixel value {v} outside [-1, 1]")));
        }
        let classes = one_hot_indices(&labels)?;
        Ok(LabeledDataset {
            images,
            labels,
            classes,
            meta,
        })
    }

    /// Builds one-hot labels from class indices.
    pub fn from_classes(images: Tensor, classes: &[usize], meta: DatasetMeta) -> Result<Self> {
        let m = meta.label_names.len();
        if m == 0 {
            return Err(Error::Input("dataset needs at least one label".into()));
        }
        let mut labels = vec![0.0; classes.len() * m];
        for (i, &c) in classes.iter().enumerate() {
            if c >= m {
                return Err(Error::Input(format!("label {c} out of range for {m} classes")));
            }
            labels[i * m + c] = 1.0;
        }
        Self::new(images, Tensor::new(vec![classes.len(), m], labels)?, meta)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn images(&self) -> &Tensor {
        &self.images
    }

    pub fn labels(&self) -> &Tensor {
        &self.labels
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn cond_dim(&self) -> usize {
        self.meta.label_names.len()
    }

    pub fn image_shape(&self) -> [usize; 3] {
        let s = self.images.shape();
        [s[1], s[2], s[3]]
    }

    pub fn image_len(&self) -> usize {
        self.image_shape().iter().product()
    }

    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.cond_dim()];
        for &c in &self.classes {
            counts[c] += 1;
        }
        counts
    }

    /// Empirical label frequencies.
    pub fn label_frequencies(&self) -> Vec<f64> {
        let n = self.len() as f64;
        self.label_counts().iter().map(|&k| k as f64 / n).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let classes: Vec<usize> = indices
            .iter()
            .map(|&i| {
                self.classes
                    .get(i)
                    .copied()
                    .ok_or_else(|| Error::Input(format!("index {i} out of range")))
            })
            .collect::<Result<_>>()?;
        Ok(LabeledDataset {
            images: self.images.select_rows(indices)?,
            labels: self.labels.select_rows(indices)?,
            classes,
            meta: self.meta.clone(),
        })
    }

    /// Flattened images `[n, h·w·d]` of every sample with class `c`.
    pub fn flat_images_of(&self, c: usize) -> Option<Tensor> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.classes[i] == c).collect();
        if idx.is_empty() {
            return None;
        }
        let t = self.images.select_rows(&idx).ok()?;
        t.reshape(&[idx.len(), self.image_len()]).ok()
    }

    /// Keeps only samples whose class is in `keep`, renumbering classes in
    /// the order given.
    pub fn filter_classes(&self, keep: &[usize]) -> Result<Self> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep.contains(&self.classes[i])).collect();
        if idx.is_empty() {
            return Err(Error::Input(format!("no samples with labels {keep:?}")));
        }
        let classes: Vec<usize> = idx
            .iter()
            .map(|&i| keep.iter().position(|&k| k == self.classes[i]).unwrap_or(0))
            .collect();
        let mut meta = self.meta.clone();
        meta.label_names = keep
            .iter()
            .map(|&k| self.meta.label_names.get(k).cloned().unwrap_or_else(|| k.to_string()))
            .collect();
        Self::from_classes(self.images.select_rows(&idx)?, &classes, meta)
    }

    /// Central `size × size` crop of every image.
    pub fn center_crop(&self, size: usize) -> Result<Self> {
        let [h, w, d] = self.image_shape();
        if size == 0 || size > h || size > w {
            return Err(Error::Input(format!("cannot crop {h}x{w} to {size}x{size}")));
        }
        let (top, left) = ((h - size) / 2, (w - size) / 2);
        let mut data = Vec::with_capacity(self.len() * size * size * d);
        for n in 0..self.len() {
            for i in top..top + size {
                let at = ((n * h + i) * w + left) * d;
                data.extend_from_slice(&self.images.data()[at..at + size * d]);
            }
        }
        let images = Tensor::new(vec![self.len(), size, size, d], data)?;
        Self::new(images, self.labels.clone(), self.meta.clone())
    }

    /// Non-overlapping `factor × factor` average pooling.
    pub fn average_pool(&self, factor: usize) -> Result<Self> {
        let [h, w, d] = self.image_shape();
        if factor == 0 || h % factor != 0 || w % factor != 0 {
            return Err(Error::Input(format!("cannot pool {h}x{w} by {factor}")));
        }
        let (oh, ow) = (h / factor, w / factor);
        let norm = (factor * factor) as f64;
        let mut data = vec![0.0; self.len() * oh * ow * d];
        for n in 0..self.len() {
            for i in 0..h {
                for j in 0..w {
                    let src = ((n * h + i) * w + j) * d;
                    let dst = ((n * oh + i / factor) * ow + j / factor) * d;
                    for k in 0..d {
                        data[dst + k] += self.images.data()[src + k];
                    }
                }
            }
        }
        // dividing once keeps a block of -1s at exactly -1
        for v in &mut data {
            *v /= norm;
        }
        let images = Tensor::new(vec![self.len(), oh, ow, d], data)?;
        Self::new(images, self.labels.clone(), self.meta.clone())
    }

    pub fn rename(mut self, name: &str) -> Self {
        self.meta.name = name.to_string();
        self
    }

    pub fn to_container(&self) -> Container {
        let mut c = Container::new(serde_json::to_value(&self.meta).expect("metadata serializes"));
        c.push("images", self.images.clone());
        c.push("labels", self.labels.clone());
        c
    }

    pub fn from_container(mut c: Container) -> Result<Self> {
        let meta: DatasetMeta =
            serde_json::from_value(c.meta.clone()).map_err(|e| Error::Input(format!("not a dataset container: {e}")))?;
        let images = c.take("images")?;
        let labels = c.take("labels")?;
        Self::new(images, labels, meta)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_container().write(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_container(Container::read(path)?)
    }
}

pub(crate) fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    hex(&h.finalize())
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}
