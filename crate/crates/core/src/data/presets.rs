//! Named datasets with fixed split seeds.
//!
//! | name           | source                                   | images  | split             |
//! |----------------|------------------------------------------|---------|-------------------|
//! | `tiny-mnist-3` | `<data>/tiny-mnist-3/*-ubyte`, labels 0-2 | 8×8×1   | 1500 / 300 / 300  |
//! | `mixture-3x2`  | [`mixture_3x2_spec`], 1500 per condition | 1×1×2   | 2700 / 900 / 900  |
//! | `mnist`        | `<data>/mnist/train-*-ubyte`             | 28×28×1 | 5/6, 1/12, 1/12   |
//! | `cifar10`      | `<data>/cifar-10-batches-bin/*.bin`      | 32×32×3 | 0.8, 0.1, 0.1     |
//!
//! tiny-MNIST-3 images are center-cropped to 24×24 and 3×3 average pooled.

use std::path::Path;

use super::{
    load_cifar10_binary, load_idx, mixture_3x2_spec, split, synth_mixture, MixtureOracle, SplitFractions, Splits,
};
use crate::error::{Error, Result};

pub const PRESETS: [&str; 4] = ["tiny-mnist-3", "mixture-3x2", "mnist", "cifar10"];

/// Seed for every preset's split and for the mixture draw; independent of
/// the run seed so that Q pretraining and GAN runs see the same partition.
pub const PRESET_SEED: u64 = 0;

pub struct PresetData {
    pub name: String,
    pub splits: Splits,
    /// Exact density and sampler, for synthetic presets.
    pub oracle: Option<MixtureOracle>,
    pub split_seed: u64,
}

pub fn load_preset(name: &str, data_dir: &Path) -> Result<PresetData> {
    let (splits, oracle) = match name {
        "tiny-mnist-3" => {
            let dir = data_dir.join("tiny-mnist-3");
            let ds = load_idx(&dir.join("images-idx3-ubyte"), &dir.join("labels-idx1-ubyte"))?
                .filter_classes(&[0, 1, 2])?
                .center_crop(24)?
                .average_pool(3)?
                .rename(name);
            let f = SplitFractions::new(5.0 / 7.0, 1.0 / 7.0, 1.0 / 7.0)?;
            (split(&ds, f, PRESET_SEED)?, None)
        }
        "mixture-3x2" => {
            let (ds, oracle) = synth_mixture(&mixture_3x2_spec(), 1500, PRESET_SEED)?;
            let f = SplitFractions::new(0.6, 0.2, 0.2)?;
            (split(&ds.rename(name), f, PRESET_SEED)?, Some(oracle))
        }
        "mnist" => {
            let dir = data_dir.join("mnist");
            let ds = load_idx(
                &dir.join("train-images-idx3-ubyte"),
                &dir.join("train-labels-idx1-ubyte"),
            )?
            .rename(name);
            let f = SplitFractions::new(5.0 / 6.0, 1.0 / 12.0, 1.0 / 12.0)?;
            (split(&ds, f, PRESET_SEED)?, None)
        }
        "cifar10" => {
            let dir = data_dir.join("cifar-10-batches-bin");
            let mut paths: Vec<_> = (1..=5).map(|i| dir.join(format!("data_batch_{i}.bin"))).collect();
            paths.push(dir.join("test_batch.bin"));
            let ds = load_cifar10_binary(&paths)?.rename(name);
            let f = SplitFractions::new(0.8, 0.1, 0.1)?;
            (split(&ds, f, PRESET_SEED)?, None)
        }
        other => {
            return Err(Error::Config(format!(
                "unknown dataset {other:?}; expected one of {PRESETS:?}"
            )))
        }
    };
    Ok(PresetData {
        name: name.to_string(),
        splits,
        oracle,
        split_seed: PRESET_SEED,
    })
}
