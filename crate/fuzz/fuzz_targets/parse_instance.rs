#![no_main]

use libfuzzer_sys::fuzz_target;
use pls::formats::{instance_to_json, parse_instance};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(b) = parse_instance(text) {
        assert!(b.m() >= 1);
        assert_eq!(parse_instance(&instance_to_json(&b)).unwrap(), b);
    }
});
