//! Replays the checked-in fuzz corpus through the same checks as the fuzz
//! targets, so the seeds stay valid inputs as the formats evolve.

use std::path::Path;

use condgan::checkpoint::{Container, ModelCheckpoint};
use condgan::data::{encode_cifar10, encode_idx_images, encode_idx_labels, parse_cifar10, parse_idx_images, parse_idx_labels};
use condgan::kvconfig::KvConfig;

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds for {target}");
    files.iter().map(|p| std::fs::read(p).unwrap()).collect()
}

#[test]
fn idx_seeds_round_trip() {
    for s in seeds("idx_images") {
        assert_eq!(encode_idx_images(&parse_idx_images(&s).unwrap()), s);
    }
    for s in seeds("idx_labels") {
        assert_eq!(encode_idx_labels(&parse_idx_labels(&s).unwrap()), s);
    }
}

#[test]
fn cifar_seeds_round_trip() {
    for s in seeds("cifar10") {
        assert_eq!(encode_cifar10(&parse_cifar10(&s).unwrap()), s);
    }
}

#[test]
fn checkpoint_seeds_decode() {
    let all = seeds("checkpoint");
    for s in &all {
        let c = Container::decode(s).unwrap();
        assert_eq!(Container::decode(&c.encode()).unwrap(), c);
    }
    let models = all
        .into_iter()
        .filter_map(|s| ModelCheckpoint::from_container(Container::decode(&s).unwrap()).ok())
        .count();
    assert!(models >= 1, "the corpus should hold at least one full model checkpoint");
}

#[test]
fn kvconfig_seeds_round_trip() {
    for s in seeds("kvconfig") {
        let kv = KvConfig::parse_bytes(&s).unwrap();
        assert_eq!(KvConfig::parse(&kv.to_text()).unwrap(), kv);
    }
}
