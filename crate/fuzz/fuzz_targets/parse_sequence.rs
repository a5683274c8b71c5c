#![no_main]

use libfuzzer_sys::fuzz_target;
use pls::formats::parse_sequence;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(xs) = parse_sequence(text) {
        assert!(!xs.is_empty());
        assert!(xs.iter().all(|x| (0.0..=1.0).contains(x)));
    }
});
