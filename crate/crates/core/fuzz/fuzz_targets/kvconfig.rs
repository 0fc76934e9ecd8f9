#![no_main]

use condgan::kvconfig::KvConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(kv) = KvConfig::parse_bytes(data) {
        assert_eq!(KvConfig::parse(&kv.to_text()).unwrap(), kv);
    }
});
