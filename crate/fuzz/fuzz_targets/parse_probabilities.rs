#![no_main]

use libfuzzer_sys::fuzz_target;
use pls::formats::parse_probabilities;
use pls::randgen::heavy_subsequence;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(p) = parse_probabilities(text) else { return };
    assert!(p.run_count() >= 1 && p.run_count() <= p.len());
    if p.len() <= 4096 {
        if let Ok(h) = heavy_subsequence(&p) {
            assert!(h.certify(&p));
        }
    }
});
