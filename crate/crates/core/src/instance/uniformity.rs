//! Approximate uniformity: the largest ratio of an interval's total length to
//! its longest block.

use std::cmp::Ordering;
use std::fmt;

use num::{BigInt, BigRational, BigUint};

use super::{BlockRepresentation, InstanceError};

/// Largest instance the quadratic oracle will accept.
pub const BRUTEFORCE_MAX_BLOCKS: usize = 1 << 14;

/// Exact value `sum / max` of the approximate uniformity, with the witness
/// interval `(i, j)` given as 1-based inclusive block numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApproximateUniformity {
    pub sum: u128,
    pub max: u64,
    pub witness: (usize, usize),
}

impl ApproximateUniformity {
    pub fn ratio(&self) -> BigRational {
        BigRational::new(BigInt::from(self.sum), BigInt::from(self.max))
    }

    pub fn to_f64(&self) -> f64 {
        self.sum as f64 / self.max as f64
    }

    /// Reduced numerator and denominator.
    pub fn reduced(&self) -> (BigInt, BigInt) {
        let r = self.ratio();
        (r.numer().clone(), r.denom().clone())
    }

    /// Orders by value only, ignoring the witness.
    pub fn cmp_value(&self, other: &Self) -> Ordering {
        cmp_fractions(self.sum, self.max, other.sum, other.max)
    }

    /// 0-based half-open block range of the witness.
    pub fn witness_range(&self) -> std::ops::Range<usize> {
        self.witness.0 - 1..self.witness.1
    }
}

impl fmt::Display for ApproximateUniformity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (p, q) = self.reduced();
        write!(f, "{p}/{q} ({},{})", self.witness.0, self.witness.1)
    }
}

/// Compares `a / b` with `c / d` exactly.
pub(crate) fn cmp_fractions(a: u128, b: u64, c: u128, d: u64) -> Ordering {
    match (a.checked_mul(d as u128), c.checked_mul(b as u128)) {
        (Some(lhs), Some(rhs)) => lhs.cmp(&rhs),
        _ => (BigUint::from(a) * BigUint::from(d)).cmp(&(BigUint::from(c) * BigUint::from(b))),
    }
}

// Leftmost position of the maximum over any window, O(1) per query.
struct RangeMaxIndex<'a> {
    values: &'a [u64],
    levels: Vec<Vec<u32>>,
}

impl<'a> RangeMaxIndex<'a> {
    fn new(values: &'a [u64]) -> Self {
        let n = values.len();
        let mut levels = vec![(0..n as u32).collect::<Vec<_>>()];
        let mut width = 1;
        while 2 * width <= n {
            let prev = levels.last().expect("at least one level");
            let next: Vec<u32> = (0..=n - 2 * width)
                .map(|i| Self::pick(values, prev[i], prev[i + width]))
                .collect();
            levels.push(next);
            width *= 2;
        }
        Self { values, levels }
    }

    fn pick(values: &[u64], a: u32, b: u32) -> u32 {
        // a < b positionally; ties keep the left one
        if values[b as usize] > values[a as usize] {
            b
        } else {
            a
        }
    }

    // inclusive lo..=hi
    fn argmax(&self, lo: usize, hi: usize) -> usize {
        let len = hi - lo + 1;
        let level = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let row = &self.levels[level];
        Self::pick(self.values, row[lo], row[hi + 1 - (1 << level)]) as usize
    }
}

fn better(candidate: &ApproximateUniformity, best: &ApproximateUniformity) -> bool {
    match candidate.cmp_value(best) {
        Ordering::Greater => true,
        Ordering::Equal => candidate.witness < best.witness,
        Ordering::Less => false,
    }
}

/// Approximate uniformity by recursive splitting at the range maximum.
///
/// Within a range whose longest block sits at position `p`, the best interval
/// containing `p` is the whole range, so only the range itself and the two
/// sides of `p` need to be examined. Every interval attaining the optimum is
/// one of the examined ranges, so the lexicographically smallest witness is
/// found exactly. Runs in O(m log m).
pub fn approximate_uniformity(b: &BlockRepresentation) -> ApproximateUniformity {
    let lengths = b.lengths();
    let rmq = RangeMaxIndex::new(lengths);
    let mut best: Option<ApproximateUniformity> = None;
    let mut stack = vec![(0usize, lengths.len() - 1)];
    while let Some((lo, hi)) = stack.pop() {
        let p = rmq.argmax(lo, hi);
        let candidate = ApproximateUniformity {
            sum: b.range_total(lo..hi + 1),
            max: lengths[p],
            witness: (lo + 1, hi + 1),
        };
        if best.as_ref().is_none_or(|cur| better(&candidate, cur)) {
            best = Some(candidate);
        }
        if p > lo {
            stack.push((lo, p - 1));
        }
        if p < hi {
            stack.push((p + 1, hi));
        }
    }
    best.expect("instances have at least one block")
}

/// Quadratic-time oracle over every interval, for cross-checking.
pub fn approximate_uniformity_bruteforce(
    b: &BlockRepresentation,
) -> Result<ApproximateUniformity, InstanceError> {
    let lengths = b.lengths();
    let m = lengths.len();
    if m > BRUTEFORCE_MAX_BLOCKS {
        return Err(InstanceError::TooLarge {
            m,
            limit: BRUTEFORCE_MAX_BLOCKS,
        });
    }
    let mut best = ApproximateUniformity {
        sum: lengths[0] as u128,
        max: lengths[0],
        witness: (1, 1),
    };
    for i in 0..m {
        let mut max = 0u64;
        for j in i..m {
            max = max.max(lengths[j]);
            let candidate = ApproximateUniformity {
                sum: b.range_total(i..j + 1),
                max,
                witness: (i + 1, j + 1),
            };
            // lexicographic scan order: strict improvement keeps the smallest witness
            if candidate.cmp_value(&best) == Ordering::Greater {
                best = candidate;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inst(ls: &[u64]) -> BlockRepresentation {
        BlockRepresentation::from_lengths(ls.to_vec()).unwrap()
    }

    fn value(u: &ApproximateUniformity) -> BigRational {
        u.ratio()
    }

    fn q(p: i64, r: i64) -> BigRational {
        BigRational::new(p.into(), r.into())
    }

    #[test]
    fn all_ones_is_m() {
        for m in 1..=20 {
            let u = approximate_uniformity(&inst(&vec![1; m]));
            assert_eq!(value(&u), q(m as i64, 1));
            assert_eq!(u.witness, (1, m));
        }
    }

    #[test]
    fn two_blocks() {
        let u = approximate_uniformity(&inst(&[5, 9]));
        assert_eq!(value(&u), q(14, 9));
        assert_eq!(u.witness, (1, 2));
    }

    #[test]
    fn geometric_lengths() {
        for m in 1..=20u32 {
            let ls: Vec<u64> = (0..m).map(|e| 1u64 << e).collect();
            let u = approximate_uniformity(&inst(&ls));
            let expected = q(2, 1) - BigRational::new(1.into(), (1i64 << (m - 1)).into());
            assert_eq!(value(&u), expected);
        }
    }

    #[test]
    fn bruteforce_small_cases() {
        assert_eq!(value(&approximate_uniformity_bruteforce(&inst(&[1])).unwrap()), q(1, 1));
        assert_eq!(
            value(&approximate_uniformity_bruteforce(&inst(&[1, 2, 3])).unwrap()),
            q(2, 1)
        );
    }

    #[test]
    fn bruteforce_size_guard() {
        let b = inst(&vec![1; BRUTEFORCE_MAX_BLOCKS + 1]);
        assert!(matches!(
            approximate_uniformity_bruteforce(&b),
            Err(InstanceError::TooLarge { .. })
        ));
    }

    #[test]
    fn ties_pick_smallest_witness() {
        // (1,2) and (4,5) both reach 2, the full range only 9/5
        let u = approximate_uniformity(&inst(&[1, 1, 5, 1, 1]));
        assert_eq!(value(&u), q(2, 1));
        assert_eq!(u.witness, (1, 2));
    }

    #[test]
    fn fraction_comparison_survives_overflow() {
        let big = u128::MAX / 2;
        assert_eq!(cmp_fractions(big, u64::MAX, big, u64::MAX - 1), Ordering::Less);
        assert_eq!(cmp_fractions(big, 3, big, 3), Ordering::Equal);
    }

    proptest! {
        #[test]
        fn fast_matches_bruteforce(ls in prop::collection::vec(1u64..=16, 1..=64)) {
            let b = inst(&ls);
            let fast = approximate_uniformity(&b);
            let slow = approximate_uniformity_bruteforce(&b).unwrap();
            prop_assert_eq!(fast.ratio(), slow.ratio());
            prop_assert_eq!(fast.witness, slow.witness);
        }

        #[test]
        fn bounded_by_block_count(ls in prop::collection::vec(1u64..=8, 1..=40)) {
            let b = inst(&ls);
            let u = approximate_uniformity(&b).ratio();
            let m = q(ls.len() as i64, 1);
            prop_assert!(u >= q(1, 1));
            prop_assert!(u <= m);
            let uniform = ls.iter().all(|&l| l == ls[0]);
            prop_assert_eq!(u == m, uniform);
        }
    }
}
