//! Synthetic conditional Gaussian mixtures with an exact density.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{sha256_hex, DatasetMeta, LabeledDataset};
use crate::error::{Error, Result};
use crate::graph::log_sum_exp;
use crate::rng::RngStream;
use crate::tensor::Tensor;

/// One diagonal-covariance Gaussian component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Diagonal of the covariance.
    pub var: Vec<f64>,
}

/// Per-condition mixtures over `R^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub dim: usize,
    pub conditions: Vec<Vec<Component>>,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.conditions.is_empty() {
            return Err(Error::Input("mixture needs dim ≥ 1 and at least one condition".into()));
        }
        for (c, comps) in self.conditions.iter().enumerate() {
            if comps.is_empty() {
                return Err(Error::Input(format!("condition {c} has no components")));
            }
            let total: f64 = comps.iter().map(|k| k.weight).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Input(format!("condition {c} weights sum to {total}, not 1")));
            }
            for k in comps {
                if !(k.weight > 0.0) {
                    return Err(Error::Input(format!("condition {c} has non-positive weight {}", k.weight)));
                }
                if k.mean.len() != self.dim || k.var.len() != self.dim {
                    return Err(Error::Input(format!("condition {c} component has wrong dimension")));
                }
                if k.var.iter().any(|v| !(*v > 0.0) || !v.is_finite()) || k.mean.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Input(format!("condition {c} component has invalid moments")));
                }
            }
        }
        Ok(())
    }

    pub fn cond_dim(&self) -> usize {
        self.conditions.len()
    }
}

/// Three conditions, two components each, in the plane. Each condition's
/// components sit at `±μ_c` on a circle of radius 0.5, 60° apart.
pub fn mixture_3x2_spec() -> MixtureSpec {
    let radius = 0.5;
    let stds = [[0.08, 0.08], [0.08, 0.08], [0.12, 0.05]];
    let conditions = (0..3)
        .map(|c| {
            let angle = c as f64 * PI / 3.0;
            let mu = [radius * angle.cos(), radius * angle.sin()];
            let var = vec![stds[c][0] * stds[c][0], stds[c][1] * stds[c][1]];
            [1.0, -1.0]
                .iter()
                .map(|s| Component {
                    weight: 0.5,
                    mean: vec![s * mu[0], s * mu[1]],
                    var: var.clone(),
                })
                .collect()
        })
        .collect();
    MixtureSpec { dim: 2, conditions }
}

/// Exact log-density and sampler for a [`MixtureSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureOracle {
    spec: MixtureSpec,
}

/// Draws outside `[-1, 1]^D` are rejected so samples match the dataset's
/// pixel range; this limit bounds the retries.
const MAX_REJECTIONS: usize = 1000;

impl MixtureOracle {
    pub fn new(spec: MixtureSpec) -> Result<Self> {
        spec.validate()?;
        Ok(MixtureOracle { spec })
    }

    pub fn spec(&self) -> &MixtureSpec {
        &self.spec
    }

    /// `log p(x | c)` of the untruncated mixture.
    pub fn log_density(&self, x: &[f64], c: usize) -> Result<f64> {
        let comps = self
            .spec
            .conditions
            .get(c)
            .ok_or_else(|| Error::Input(format!("condition {c} out of range")))?;
        if x.len() != self.spec.dim {
            return Err(Error::dim("mixture log_density", &[self.spec.dim], &[x.len()]));
        }
        let terms: Vec<f64> = comps
            .iter()
            .map(|k| {
                let quad: f64 = x
                    .iter()
                    .zip(&k.mean)
                    .zip(&k.var)
                    .map(|((xv, m), v)| -0.5 * (2.0 * PI * v).ln() - (xv - m) * (xv - m) / (2.0 * v))
                    .sum();
                k.weight.ln() + quad
            })
            .collect();
        Ok(log_sum_exp(&terms))
    }

    /// `count` draws from `p(x | c)` as a `[count, dim]` tensor.
    pub fn sample(&self, c: usize, count: usize, rng: &mut RngStream) -> Result<Tensor> {
        let comps = self
            .spec
            .conditions
            .get(c)
            .ok_or_else(|| Error::Input(format!("condition {c} out of range")))?;
        let weights: Vec<f64> = comps.iter().map(|k| k.weight).collect();
        let mut data = Vec::with_capacity(count * self.spec.dim);
        for _ in 0..count {
            let mut tries = 0;
            loop {
                let k = &comps[rng.categorical(&weights)];
                let x: Vec<f64> = k
                    .mean
                    .iter()
                    .zip(&k.var)
                    .map(|(m, v)| m + v.sqrt() * rng.normal())
                    .collect();
                if x.iter().all(|v| v.abs() <= 1.0) {
                    data.extend(x);
                    break;
                }
                tries += 1;
                if tries >= MAX_REJECTIONS {
                    return Err(Error::Input(format!(
                        "condition {c} puts almost no mass inside [-1, 1]^{}",
                        self.spec.dim
                    )));
                }
            }
        }
        Tensor::new(vec![count, self.spec.dim], data)
    }
}

/// `count_per_condition` samples of every condition as `1×1×D` images,
/// grouped by condition, plus the exact oracle.
pub fn synth_mixture(
    spec: &MixtureSpec,
    count_per_condition: usize,
    seed: u64,
) -> Result<(LabeledDataset, MixtureOracle)> {
    if count_per_condition == 0 {
        return Err(Error::Input("count_per_condition must be positive".into()));
    }
    let oracle = MixtureOracle::new(spec.clone())?;
    let root = RngStream::new(seed).split("mixture");
    let m = spec.cond_dim();
    let mut data = Vec::with_capacity(m * count_per_condition * spec.dim);
    let mut classes = Vec::with_capacity(m * count_per_condition);
    for c in 0..m {
        let s = oracle.sample(c, count_per_condition, &mut root.split_index(c as u64))?;
        data.extend_from_slice(s.data());
        classes.extend(std::iter::repeat_n(c, count_per_condition));
    }
    let images = Tensor::new(vec![classes.len(), 1, 1, spec.dim], data)?;
    let spec_json = serde_json::to_vec(spec).expect("spec serializes");
    let meta = DatasetMeta {
        name: "mixture".into(),
        source_checksum: sha256_hex(&[&spec_json, &seed.to_le_bytes()]),
        scale: "identity (samples already in [-1, 1])".into(),
        label_names: (0..m).map(|c| c.to_string()).collect(),
    };
    Ok((LabeledDataset::from_classes(images, &classes, meta)?, oracle))
}
