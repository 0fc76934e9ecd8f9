#![no_main]

use condgan::data::{encode_cifar10, parse_cifar10};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = parse_cifar10(data) {
        assert_eq!(encode_cifar10(&records), data);
    }
});
