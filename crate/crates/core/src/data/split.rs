use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl SplitFractions {
    pub fn new(train: f64, valid: f64, test: f64) -> Result<Self> {
        let f = SplitFractions { train, valid, test };
        let parts = [train, valid, test];
        if parts.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::Input(format!("split fractions must all be positive, got {parts:?}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Input(format!("split fractions must sum to 1, got {parts:?}")));
        }
        Ok(f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Splits {
    pub train: LabeledDataset,
    pub valid: LabeledDataset,
    pub test: LabeledDataset,
}

/// Per-class part sizes: rounded train and valid shares, the rest to test,
/// with every part holding at least one sample.
fn part_sizes(n: usize, f: SplitFractions) -> [usize; 3] {
    let train = (f.train * n as f64).round() as usize;
    let valid = (f.valid * n as f64).round() as usize;
    let mut sizes = [train.min(n), valid.min(n - train.min(n)), 0];
    sizes[2] = n - sizes[0] - sizes[1];
    for k in 0..3 {
        while sizes[k] == 0 {
            let largest = (0..3).max_by_key(|&j| (sizes[j], 3 - j)).unwrap_or(0);
            sizes[largest] -= 1;
            sizes[k] += 1;
        }
    }
    sizes
}

/// Stratified partition of `0..classes.len()` into train/valid/test indices,
/// each sorted ascending.
pub fn split_indices(classes: &[usize], m: usize, fractions: SplitFractions, seed: u64) -> Result<[Vec<usize>; 3]> {
    let root = RngStream::new(seed).split("split");
    let mut parts: [Vec<usize>; 3] = Default::default();
    for label in 0..m {
        let mut members: Vec<usize> = (0..classes.len()).filter(|&i| classes[i] == label).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 3 {
            return Err(Error::Input(format!(
                "label {label} has {} samples, fewer than the 3 split parts",
                members.len()
            )));
        }
        root.split_index(label as u64).shuffle(&mut members);
        let sizes = part_sizes(members.len(), fractions);
        let mut rest = members.as_slice();
        for (part, &size) in parts.iter_mut().zip(&sizes) {
            let (head, tail) = rest.split_at(size);
            part.extend_from_slice(head);
            rest = tail;
        }
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    Ok(parts)
}

pub fn split(dataset: &LabeledDataset, fractions: SplitFractions, seed: u64) -> Result<Splits> {
    let [train, valid, test] = split_indices(dataset.classes(), dataset.cond_dim(), fractions, seed)?;
    Ok(Splits {
        train: dataset.subset(&train)?,
        valid: dataset.subset(&valid)?,
        test: dataset.subset(&test)?,
    })
}
