//! CIFAR-10 binary batches: 3073-byte records of one label byte followed by
//! 1024 red, 1024 green and 1024 blue bytes (row-major 32×32 planes).

use std::path::PathBuf;

use super::{byte_to_unit, read_file, sha256_hex, DatasetMeta, LabeledDataset, BYTE_SCALE};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const CIFAR_SIDE: usize = 32;
pub const CIFAR_PLANE: usize = CIFAR_SIDE * CIFAR_SIDE;
pub const CIFAR_RECORD_LEN: usize = 1 + 3 * CIFAR_PLANE;

pub const CIFAR10_LABELS: [&str; 10] = [
    "airplane",
    "automobile",
    "bird",
    "cat",
    "deer",
    "dog",
    "frog",
    "horse",
    "ship",
    "truck",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CifarRecord {
    pub label: u8,
    /// Channel-planar pixels as stored: R plane, G plane, B plane.
    pub planar: Vec<u8>,
}

impl CifarRecord {
    /// Pixels reordered to `[32, 32, 3]` interleaved.
    pub fn interleaved(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(3 * CIFAR_PLANE);
        for p in 0..CIFAR_PLANE {
            for ch in 0..3 {
                out.push(self.planar[ch * CIFAR_PLANE + p]);
            }
        }
        out
    }
}

pub fn parse_cifar10(bytes: &[u8]) -> Result<Vec<CifarRecord>> {
    if bytes.is_empty() || !bytes.len().is_multiple_of(CIFAR_RECORD_LEN) {
        return Err(Error::parse(
            bytes.len() - bytes.len() % CIFAR_RECORD_LEN,
            format!(
                "file length {} is not a positive multiple of {CIFAR_RECORD_LEN}",
                bytes.len()
            ),
        ));
    }
    bytes
        .chunks_exact(CIFAR_RECORD_LEN)
        .enumerate()
        .map(|(i, rec)| {
            let label = rec[0];
            if label as usize >= CIFAR10_LABELS.len() {
                return Err(Error::parse(
                    i * CIFAR_RECORD_LEN,
                    format!("record {i} has label {label}, expected 0..=9"),
                ));
            }
            Ok(CifarRecord {
                label,
                planar: rec[1..].to_vec(),
            })
        })
        .collect()
}

pub fn encode_cifar10(records: &[CifarRecord]) -> Vec<u8> {
    let mut out = Vec::with_capacity(records.len() * CIFAR_RECORD_LEN);
    for r in records {
        out.push(r.label);
        out.extend_from_slice(&r.planar);
    }
    out
}

pub fn dataset_from_cifar10(records: &[CifarRecord], name: &str, checksum: String) -> Result<LabeledDataset> {
    if records.is_empty() {
        return Err(Error::Input("no CIFAR-10 records".into()));
    }
    let mut data = Vec::with_capacity(records.len() * 3 * CIFAR_PLANE);
    for r in records {
        data.extend(r.interleaved().into_iter().map(byte_to_unit));
    }
    let images = Tensor::new(vec![records.len(), CIFAR_SIDE, CIFAR_SIDE, 3], data)?;
    let classes: Vec<usize> = records.iter().map(|r| r.label as usize).collect();
    let meta = DatasetMeta {
        name: name.to_string(),
        source_checksum: checksum,
        scale: BYTE_SCALE.to_string(),
        label_names: CIFAR10_LABELS.iter().map(|s| s.to_string()).collect(),
    };
    LabeledDataset::from_classes(images, &classes, meta)
}

/// Concatenates the records of every batch file, in the order given.
pub fn load_cifar10_binary(paths: &[PathBuf]) -> Result<LabeledDataset> {
    let mut records = Vec::new();
    let mut blobs = Vec::new();
    for p in paths {
        let bytes = read_file(p)?;
        records.extend(parse_cifar10(&bytes)?);
        blobs.push(bytes);
    }
    let parts: Vec<&[u8]> = blobs.iter().map(Vec::as_slice).collect();
    dataset_from_cifar10(&records, "cifar10", sha256_hex(&parts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(label: u8, seed: u8) -> CifarRecord {
        CifarRecord {
            label,
            planar: (0..3 * CIFAR_PLANE).map(|i| (i as u8).wrapping_mul(7).wrapping_add(seed)).collect(),
        }
    }

    #[test]
    fn frog_label() {
        let bytes = encode_cifar10(&[record(6, 0), record(1, 3)]);
        let recs = parse_cifar10(&bytes).unwrap();
        let ds = dataset_from_cifar10(&recs, "t", String::new()).unwrap();
        assert_eq!(ds.classes()[0], 6);
        assert_eq!(ds.meta().label_names[6], "frog");
        assert_eq!(ds.image_shape(), [32, 32, 3]);
    }

    #[test]
    fn planar_to_interleaved() {
        let r = record(0, 1);
        let px = r.interleaved();
        // pixel (0, 1): R at planar[1], G at planar[1025], B at planar[2049]
        assert_eq!(&px[3..6], &[r.planar[1], r.planar[CIFAR_PLANE + 1], r.planar[2 * CIFAR_PLANE + 1]]);
    }

    #[test]
    fn truncated_file_names_multiple() {
        let bytes = encode_cifar10(&[record(2, 0)]);
        let msg = parse_cifar10(&bytes[..bytes.len() - 1]).unwrap_err().to_string();
        assert!(msg.contains("3073"), "{msg}");
        assert!(parse_cifar10(&[]).is_err());
    }

    #[test]
    fn reserializes_to_source_bytes() {
        let bytes = encode_cifar10(&[record(9, 5), record(0, 2), record(4, 250)]);
        assert_eq!(encode_cifar10(&parse_cifar10(&bytes).unwrap()), bytes);
    }

    #[test]
    fn bad_label_byte() {
        let bytes = encode_cifar10(&[record(3, 0), record(10, 0)]);
        let err = parse_cifar10(&bytes).unwrap_err();
        assert!(matches!(err, Error::Parse { offset: 3073, .. }), "{err}");
    }
}
