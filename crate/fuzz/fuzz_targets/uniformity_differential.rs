#![no_main]

use libfuzzer_sys::fuzz_target;
use pls::instance::{approximate_uniformity, approximate_uniformity_bruteforce, BlockRepresentation};

// each byte is one block length
fuzz_target!(|data: &[u8]| {
    let ls: Vec<u64> = data.iter().take(256).map(|&b| u64::from(b) + 1).collect();
    let Ok(b) = BlockRepresentation::from_lengths(ls) else { return };
    let fast = approximate_uniformity(&b);
    let slow = approximate_uniformity_bruteforce(&b).unwrap();
    assert_eq!(fast.ratio(), slow.ratio());
    assert_eq!(fast.witness, slow.witness);
});
