#![no_main]

use condgan::checkpoint::{Container, ModelCheckpoint};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(c) = Container::decode(data) {
        // JSON metadata may be re-serialized differently, so compare decoded forms
        assert_eq!(Container::decode(&c.encode()).unwrap(), c);
        let _ = ModelCheckpoint::from_container(c);
    }
});
