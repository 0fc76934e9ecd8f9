use std::collections::BTreeMap;

use condgan::checkpoint::Container;
use condgan::data::{
    encode_cifar10, encode_idx_images, encode_idx_labels, parse_cifar10, parse_idx_images, parse_idx_labels,
    CifarRecord, IdxImages, CIFAR_RECORD_LEN,
};
use condgan::kvconfig::KvConfig;
use condgan::{Error, Tensor};
use proptest::prelude::*;

fn idx_images() -> impl Strategy<Value = IdxImages> {
    (1usize..6, 1usize..6, 1usize..6).prop_flat_map(|(count, rows, cols)| {
        prop::collection::vec(any::<u8>(), count * rows * cols).prop_map(move |pixels| IdxImages {
            count,
            rows,
            cols,
            pixels,
        })
    })
}

fn cifar_records() -> impl Strategy<Value = Vec<CifarRecord>> {
    prop::collection::vec(
        (0u8..10, prop::collection::vec(any::<u8>(), CIFAR_RECORD_LEN - 1))
            .prop_map(|(label, planar)| CifarRecord { label, planar }),
        1..3,
    )
}

fn tensor() -> impl Strategy<Value = Tensor> {
    prop::collection::vec(1usize..4, 1..4).prop_flat_map(|shape| {
        let n: usize = shape.iter().product();
        prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), n)
            .prop_map(move |data| Tensor::new(shape.clone(), data).unwrap())
    })
}

fn container() -> impl Strategy<Value = Container> {
    (
        prop::collection::btree_map("[a-z]{1,6}", "[ -~]{0,10}", 0..4),
        prop::collection::vec(("[a-z0-9._]{1,8}", tensor()), 0..4),
    )
        .prop_map(|(meta, tensors)| {
            let mut c = Container::new(serde_json::to_value(meta).unwrap());
            for (name, t) in tensors {
                c.push(name, t);
            }
            c
        })
}

fn is_parse(e: &Error) -> bool {
    matches!(e, Error::Parse { .. })
}

proptest! {
    #[test]
    fn idx_round_trips(images in idx_images()) {
        let bytes = encode_idx_images(&images);
        prop_assert_eq!(parse_idx_images(&bytes).unwrap(), images.clone());
        let labels: Vec<u8> = images.pixels.iter().map(|p| p % 10).collect();
        prop_assert_eq!(parse_idx_labels(&encode_idx_labels(&labels)).unwrap(), labels);
    }

    #[test]
    fn idx_rejects_every_strict_prefix(images in idx_images(), cut in any::<prop::sample::Index>()) {
        let bytes = encode_idx_images(&images);
        let len = cut.index(bytes.len());
        prop_assert!(is_parse(&parse_idx_images(&bytes[..len]).unwrap_err()));
    }

    #[test]
    fn cifar_round_trips(records in cifar_records()) {
        let bytes = encode_cifar10(&records);
        prop_assert_eq!(parse_cifar10(&bytes).unwrap(), records);
    }

    #[test]
    fn container_round_trips(c in container()) {
        let bytes = c.encode();
        let back = Container::decode(&bytes).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.encode(), bytes);
    }

    #[test]
    fn container_rejects_truncation(c in container(), cut in any::<prop::sample::Index>()) {
        let bytes = c.encode();
        let len = cut.index(bytes.len());
        prop_assert!(is_parse(&Container::decode(&bytes[..len]).unwrap_err()));
    }

    #[test]
    fn container_rejects_trailing_bytes(c in container(), extra in prop::collection::vec(any::<u8>(), 1..8)) {
        let mut bytes = c.encode();
        bytes.extend(extra);
        prop_assert!(is_parse(&Container::decode(&bytes).unwrap_err()));
    }

    #[test]
    fn decoders_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
        let _ = parse_idx_images(&bytes);
        let _ = parse_idx_labels(&bytes);
        let _ = parse_cifar10(&bytes);
        let _ = Container::decode(&bytes);
        let _ = KvConfig::parse_bytes(&bytes);
    }

    #[test]
    fn kvconfig_round_trips(entries in prop::collection::btree_map("[A-Za-z0-9_.-]{1,12}", "[A-Za-z0-9_.,+-]{0,12}", 0..8)) {
        let mut kv = KvConfig::default();
        for (k, v) in &entries {
            kv.set(k, v.clone()).unwrap();
        }
        let text = kv.to_text();
        let back = KvConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &kv);
        let got: BTreeMap<String, String> = back.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        prop_assert_eq!(got, entries);
    }
}

#[test]
fn kvconfig_reports_the_offending_line() {
    let err = KvConfig::parse("a = 1\nb = 2\na = 3\n").unwrap_err();
    match err {
        Error::Parse { offset, message } => {
            assert_eq!(offset, 12);
            assert!(message.contains("duplicate"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    assert!(is_parse(&KvConfig::parse("no equals sign").unwrap_err()));
    assert!(is_parse(&KvConfig::parse("bad key = 1").unwrap_err()));
    assert!(is_parse(&KvConfig::parse_bytes(b"a = \xff").unwrap_err()));
    let kv = KvConfig::parse("# header\n  steps = 10 # trailing\nempty =\n").unwrap();
    assert_eq!(kv.get("steps"), Some("10"));
    assert_eq!(kv.get("empty"), Some(""));
}

#[test]
fn container_rejects_bad_magic_and_version() {
    let mut bytes = Container::new(serde_json::json!({})).encode();
    bytes[0] = b'X';
    assert!(is_parse(&Container::decode(&bytes).unwrap_err()));
    let mut bytes = Container::new(serde_json::json!({})).encode();
    bytes[8] = 9;
    assert!(is_parse(&Container::decode(&bytes).unwrap_err()));
}

#[test]
fn container_rejects_huge_extents_without_allocating() {
    let mut c = Container::new(serde_json::json!(null));
    c.push("w", Tensor::zeros(&[1]));
    let mut bytes = c.encode();
    // meta "null" is 4 bytes; extent of the single dimension follows name and rank
    let extent_at = 8 + 4 + 8 + 4 + 4 + 4 + 1 + 4;
    bytes[extent_at..extent_at + 8].copy_from_slice(&u64::MAX.to_le_bytes());
    assert!(is_parse(&Container::decode(&bytes).unwrap_err()));
}
