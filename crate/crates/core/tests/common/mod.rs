#![allow(dead_code)]

use num::{BigInt, BigRational};
use pls::instance::{BlockRepresentation, Family};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn inst(ls: &[u64]) -> BlockRepresentation {
    BlockRepresentation::from_lengths(ls.to_vec()).unwrap()
}

pub fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// Named instances shared by the integration tests: the four families, some
/// hand-picked shapes and seeded random ones.
pub fn corpus() -> Vec<(String, BlockRepresentation)> {
    let mut out: Vec<(String, BlockRepresentation)> = Vec::new();
    let mut family = |f: Family| out.push((f.to_string(), f.build().unwrap()));
    for m in [1, 2, 3, 4, 5, 8, 16, 33] {
        family(Family::Ones { m });
    }
    for m in 1..=10 {
        family(Family::Geometric { m });
    }
    for k in 1..=4 {
        family(Family::Cantor { k });
    }
    for (k, h) in [(2, 1), (2, 2), (3, 2), (2, 3), (4, 2)] {
        family(Family::Separation { k, h });
    }
    let shapes: [&[u64]; 10] = [
        &[5, 9],
        &[1, 5, 1, 2],
        &[3, 1, 4, 1, 5, 9, 2, 6],
        &[1, 2, 4, 8, 16, 32],
        &[32, 16, 8, 4, 2, 1],
        &[7],
        &[2, 2, 2, 1],
        &[1, 100, 1],
        &[100, 1, 1, 1, 1, 1, 100],
        &[1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 64],
    ];
    for s in shapes {
        let b = inst(s);
        out.push((b.describe(), b));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..24 {
        let m = rng.random_range(1..=24);
        let top = *[2u64, 4, 16, 1000].get(rng.random_range(0..4)).unwrap();
        let ls: Vec<u64> = (0..m).map(|_| rng.random_range(1..=top)).collect();
        let origin = if rng.random_bool(0.3) { rng.random_range(1..10) } else { 0 };
        let b = BlockRepresentation::new(ls, origin).unwrap();
        out.push((b.describe(), b));
    }
    out
}

/// Every instance with `1..=max_m` blocks of lengths `1..=max_len`.
pub fn all_instances(max_m: usize, max_len: u64) -> Vec<BlockRepresentation> {
    let mut out = Vec::new();
    for m in 1..=max_m {
        let mut ls = vec![1u64; m];
        loop {
            out.push(inst(&ls));
            let mut pos = 0;
            while pos < m && ls[pos] == max_len {
                ls[pos] = 1;
                pos += 1;
            }
            if pos == m {
                break;
            }
            ls[pos] += 1;
        }
    }
    out
}
