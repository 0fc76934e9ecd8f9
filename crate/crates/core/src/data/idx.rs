//! MNIST IDX files (big-endian, unsigned byte payloads).

use std::path::Path;

use super::{byte_to_unit, read_file, sha256_hex, DatasetMeta, LabeledDataset, BYTE_SCALE};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::parse(at, format!("truncated header: missing {what}")))
}

fn check_magic(bytes: &[u8], expected: u32, kind: &str) -> Result<()> {
    let magic = be_u32(bytes, 0, "magic number")?;
    if magic != expected {
        return Err(Error::parse(
            0,
            format!("bad {kind} magic 0x{magic:08x}, expected 0x{expected:08x}"),
        ));
    }
    Ok(())
}

fn check_payload(bytes: &[u8], header: usize, expected: usize, what: &str) -> Result<()> {
    let found = bytes.len() - header;
    if found != expected {
        let msg = if found < expected {
            format!("truncated {what}: expected {expected} bytes, found {found}")
        } else {
            format!("{} trailing bytes after {what}", found - expected)
        };
        return Err(Error::parse(header + found.min(expected), msg));
    }
    Ok(())
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    check_magic(bytes, IDX_IMAGES_MAGIC, "image file")?;
    let count = be_u32(bytes, 4, "image count")? as usize;
    let rows = be_u32(bytes, 8, "row count")? as usize;
    let cols = be_u32(bytes, 12, "column count")? as usize;
    if count == 0 || rows == 0 || cols == 0 {
        return Err(Error::parse(4, format!("empty image file ({count} × {rows} × {cols})")));
    }
    let expected = count
        .checked_mul(rows)
        .and_then(|n| n.checked_mul(cols))
        .ok_or_else(|| Error::parse(4, "image dimensions overflow"))?;
    check_payload(bytes, 16, expected, "pixel data")?;
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: bytes[16..].to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, IDX_LABELS_MAGIC, "label file")?;
    let count = be_u32(bytes, 4, "label count")? as usize;
    if count == 0 {
        return Err(Error::parse(4, "empty label file"));
    }
    check_payload(bytes, 8, count, "label data")?;
    Ok(bytes[8..].to_vec())
}

pub fn encode_idx_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [
        IDX_IMAGES_MAGIC,
        images.count as u32,
        images.rows as u32,
        images.cols as u32,
    ] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Parses an image/label file pair. The class count is `max label + 1`.
pub fn dataset_from_idx(image_bytes: &[u8], label_bytes: &[u8], name: &str) -> Result<LabeledDataset> {
    let images = parse_idx_images(image_bytes)?;
    let labels = parse_idx_labels(label_bytes)?;
    if labels.len() != images.count {
        return Err(Error::parse(
            4,
            format!("label count {} does not match image count {}", labels.len(), images.count),
        ));
    }
    let m = labels.iter().copied().max().unwrap_or(0) as usize + 1;
    let data = images.pixels.iter().map(|&b| byte_to_unit(b)).collect();
    let tensor = Tensor::new(vec![images.count, images.rows, images.cols, 1], data)?;
    let classes: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
    let meta = DatasetMeta {
        name: name.to_string(),
        source_checksum: sha256_hex(&[image_bytes, label_bytes]),
        scale: BYTE_SCALE.to_string(),
        label_names: (0..m).map(|i| i.to_string()).collect(),
    };
    LabeledDataset::from_classes(tensor, &classes, meta)
}

pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<LabeledDataset> {
    let image_bytes = read_file(images_path)?;
    let label_bytes = read_file(labels_path)?;
    let name = images_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".into());
    dataset_from_idx(&image_bytes, &label_bytes, &name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> (Vec<u8>, Vec<u8>) {
        let images = IdxImages {
            count: 2,
            rows: 2,
            cols: 2,
            pixels: vec![0, 255, 128, 64, 1, 2, 3, 4],
        };
        (encode_idx_images(&images), encode_idx_labels(&[1, 0]))
    }

    #[test]
    fn mnist_training_header() {
        let mut header = vec![0x00, 0x00, 0x08, 0x03, 0x00, 0x00, 0xEA, 0x60];
        header.extend_from_slice(&28u32.to_be_bytes());
        header.extend_from_slice(&28u32.to_be_bytes());
        header.resize(16 + 60000 * 28 * 28, 0);
        let parsed = parse_idx_images(&header).unwrap();
        assert_eq!((parsed.count, parsed.rows, parsed.cols), (60000, 28, 28));
    }

    #[test]
    fn wrong_label_magic_names_expected() {
        let (_, mut labels) = tiny();
        labels[3] = 0x03;
        let msg = parse_idx_labels(&labels).unwrap_err().to_string();
        assert!(msg.contains("0x00000801"), "{msg}");
        assert!(msg.contains("byte 0"), "{msg}");
    }

    #[test]
    fn scale_endpoints_and_one_hot() {
        let (img, lab) = tiny();
        let ds = dataset_from_idx(&img, &lab, "tiny").unwrap();
        assert_eq!(ds.images().data()[0], -1.0);
        assert_eq!(ds.images().data()[1], 1.0);
        assert_eq!(ds.classes(), &[1, 0]);
        assert_eq!(ds.labels().data(), &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(ds.image_shape(), [2, 2, 1]);
    }

    #[test]
    fn count_mismatch_and_truncation() {
        let (img, _) = tiny();
        let lab = encode_idx_labels(&[1, 0, 1]);
        assert!(matches!(dataset_from_idx(&img, &lab, "x"), Err(Error::Parse { .. })));
        let msg = parse_idx_images(&img[..img.len() - 1]).unwrap_err().to_string();
        assert!(msg.contains("truncated"), "{msg}");
        assert!(parse_idx_images(&img[..10]).is_err());
        let mut long = img.clone();
        long.push(9);
        assert!(parse_idx_images(&long).is_err());
    }

    #[test]
    fn huge_declared_dims_do_not_allocate() {
        let mut b = IDX_IMAGES_MAGIC.to_be_bytes().to_vec();
        for _ in 0..3 {
            b.extend_from_slice(&u32::MAX.to_be_bytes());
        }
        assert!(parse_idx_images(&b).is_err());
    }
}
