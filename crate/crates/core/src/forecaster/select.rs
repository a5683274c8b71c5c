//! Randomized choice of a prediction position and half-window inside `2^k`
//! consecutive blocks.

use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use rand::Rng;

use super::ForecastError;
use crate::instance::BlockRepresentation;

/// Largest `k` for which the full outcome law is enumerated.
pub const ENUMERATION_MAX_K: u32 = 20;
/// Largest `k` for which outcome probabilities are also kept as exact rationals.
pub const EXACT_PROBABILITY_MAX_K: u32 = 10;

/// Predict the mean of blocks `i ..= i + j - 1` from the mean of blocks
/// `i - j ..= i - 1` (1-based block numbers).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SelectOutcome {
    pub i: usize,
    pub j: usize,
}

impl SelectOutcome {
    /// 0-based source blocks.
    pub fn source(&self) -> std::ops::Range<usize> {
        self.i - self.j - 1..self.i - 1
    }

    /// 0-based target blocks.
    pub fn target(&self) -> std::ops::Range<usize> {
        self.i - 1..self.i + self.j - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedOutcome {
    pub outcome: SelectOutcome,
    pub probability: f64,
    /// Present when the law was enumerated with `k <= EXACT_PROBABILITY_MAX_K`.
    pub exact: Option<BigRational>,
}

/// Exact law of [`random_select`] for one `(s, k)` call; `2^k - 1` outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    outcomes: Vec<WeightedOutcome>,
}

impl OutcomeDistribution {
    pub fn outcomes(&self) -> &[WeightedOutcome] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum()
    }

    /// Sum of the exact probabilities, when every outcome carries one.
    pub fn exact_total(&self) -> Option<BigRational> {
        self.outcomes
            .iter()
            .map(|o| o.exact.clone())
            .sum::<Option<BigRational>>()
    }

    pub fn probability_of(&self, outcome: SelectOutcome) -> f64 {
        self.outcomes
            .iter()
            .find(|o| o.outcome == outcome)
            .map_or(0.0, |o| o.probability)
    }
}

fn check_bounds(m: usize, s: usize, k: u32) -> Result<(), ForecastError> {
    let err = || ForecastError::SelectBounds { s, k, m };
    if s < 1 || !(1..usize::BITS - 1).contains(&k) {
        return Err(err());
    }
    let span = 1usize << k;
    match s.checked_add(span - 1) {
        Some(end) if end <= m => Ok(()),
        _ => Err(err()),
    }
}

/// One draw of the selection procedure on blocks `s ..= s + 2^k - 1`.
///
/// With probability `1/k` the answer is the midpoint split
/// `(s + 2^(k-1), 2^(k-1))`; otherwise the procedure recurses into the first
/// half with probability equal to that half's share of the total length, and
/// into the second half otherwise.
pub fn random_select<R: Rng + ?Sized>(
    b: &BlockRepresentation,
    s: usize,
    k: u32,
    rng: &mut R,
) -> Result<SelectOutcome, ForecastError> {
    check_bounds(b.m(), s, k)?;
    let (mut s, mut k) = (s, k);
    loop {
        let half = 1usize << (k - 1);
        if k == 1 || rng.random_bool(1.0 / k as f64) {
            return Ok(SelectOutcome { i: s + half, j: half });
        }
        let first = b.range_total(s - 1..s - 1 + half);
        let all = b.range_total(s - 1..s - 1 + 2 * half);
        if !rng.random_bool(first as f64 / all as f64) {
            s += half;
        }
        k -= 1;
    }
}

/// Enumerates the law of [`random_select`] exactly.
pub fn random_select_distribution(
    b: &BlockRepresentation,
    s: usize,
    k: u32,
) -> Result<OutcomeDistribution, ForecastError> {
    check_bounds(b.m(), s, k)?;
    if k > ENUMERATION_MAX_K {
        return Err(ForecastError::EnumerationLimit {
            k,
            limit: ENUMERATION_MAX_K,
        });
    }
    let exact = k <= EXACT_PROBABILITY_MAX_K;
    let mut outcomes = Vec::with_capacity((1usize << k) - 1);
    let start_exact = exact.then(BigRational::one);
    enumerate(b, s, k, 1.0, start_exact, &mut outcomes);
    outcomes.sort_by_key(|o| o.outcome);
    Ok(OutcomeDistribution { outcomes })
}

fn enumerate(
    b: &BlockRepresentation,
    s: usize,
    k: u32,
    prob: f64,
    exact: Option<BigRational>,
    out: &mut Vec<WeightedOutcome>,
) {
    let half = 1usize << (k - 1);
    let stop = BigRational::new(BigInt::one(), BigInt::from(k));
    let outcome = SelectOutcome { i: s + half, j: half };
    if k == 1 {
        out.push(WeightedOutcome {
            outcome,
            probability: prob,
            exact,
        });
        return;
    }
    let first = b.range_total(s - 1..s - 1 + half);
    let all = b.range_total(s - 1..s - 1 + 2 * half);
    let stop_f = 1.0 / k as f64;
    let left_f = first as f64 / all as f64;
    out.push(WeightedOutcome {
        outcome,
        probability: prob * stop_f,
        exact: exact.as_ref().map(|e| e * &stop),
    });
    let go_on = BigRational::one() - &stop;
    let left = BigRational::new(BigInt::from(first), BigInt::from(all));
    let right = BigRational::one() - &left;
    let left_exact = exact.as_ref().map(|e| e * &go_on * &left);
    let right_exact = exact.as_ref().map(|e| e * &go_on * &right);
    let rest = prob * (1.0 - stop_f);
    // children always share the total, even when the float split underflows
    let (left_p, right_p) = match (&left_exact, &right_exact) {
        (Some(l), Some(r)) => (
            l.to_f64().unwrap_or(rest * left_f),
            r.to_f64().unwrap_or(rest * (1.0 - left_f)),
        ),
        _ => (rest * left_f, rest * (1.0 - left_f)),
    };
    if !left.is_zero() {
        enumerate(b, s, k - 1, left_p, left_exact, out);
    }
    if !right.is_zero() {
        enumerate(b, s + half, k - 1, right_p, right_exact, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inst(ls: &[u64]) -> BlockRepresentation {
        BlockRepresentation::from_lengths(ls.to_vec()).unwrap()
    }

    fn q(p: i64, r: i64) -> BigRational {
        BigRational::new(p.into(), r.into())
    }

    #[test]
    fn k_one_is_forced() {
        let b = inst(&[3, 7, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            assert_eq!(
                random_select(&b, 1, 1, &mut rng).unwrap(),
                SelectOutcome { i: 2, j: 1 }
            );
            assert_eq!(
                random_select(&b, 2, 1, &mut rng).unwrap(),
                SelectOutcome { i: 3, j: 1 }
            );
        }
        let d = random_select_distribution(&inst(&[1, 1]), 1, 1).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.outcomes()[0].exact, Some(q(1, 1)));
    }

    #[test]
    fn law_on_four_unit_blocks() {
        let d = random_select_distribution(&inst(&[1; 4]), 1, 2).unwrap();
        let exact: Vec<_> = d
            .outcomes()
            .iter()
            .map(|o| (o.outcome.i, o.outcome.j, o.exact.clone().unwrap()))
            .collect();
        assert_eq!(
            exact,
            vec![(2, 1, q(1, 4)), (3, 2, q(1, 2)), (4, 1, q(1, 4))]
        );
    }

    #[test]
    fn law_weights_halves_by_length() {
        let d = random_select_distribution(&inst(&[1, 3, 1, 3]), 1, 2).unwrap();
        let get = |i, j| {
            d.outcomes()
                .iter()
                .find(|o| o.outcome == SelectOutcome { i, j })
                .unwrap()
                .exact
                .clone()
                .unwrap()
        };
        assert_eq!(get(3, 2), q(1, 2));
        assert_eq!(get(2, 1), q(1, 4));
        assert_eq!(get(4, 1), q(1, 4));
    }

    #[test]
    fn exact_total_is_one() {
        let ls: Vec<u64> = (0..1024u64).map(|i| 1 + (i * 7919) % 13).collect();
        let b = inst(&ls);
        for k in 1..=10 {
            let d = random_select_distribution(&b, 1, k).unwrap();
            assert_eq!(d.len(), (1 << k) - 1);
            assert_eq!(d.exact_total(), Some(BigRational::one()));
        }
        let d = random_select_distribution(&b, 1, 10).unwrap();
        assert!((d.total_probability() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn large_k_uses_floats() {
        let b = inst(&vec![1; 1 << 12]);
        let d = random_select_distribution(&b, 1, 12).unwrap();
        assert!(d.outcomes().iter().all(|o| o.exact.is_none()));
        assert!((d.total_probability() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bounds_are_checked() {
        let b = inst(&[1; 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(random_select(&b, 0, 1, &mut rng).is_err());
        assert!(random_select(&b, 1, 0, &mut rng).is_err());
        assert!(random_select(&b, 2, 2, &mut rng).is_err());
        assert!(random_select(&b, 1, 3, &mut rng).is_err());
        assert!(random_select(&b, 1, 70, &mut rng).is_err());
        let big = inst(&vec![1; 1 << 21]);
        assert!(matches!(
            random_select_distribution(&big, 1, 21),
            Err(ForecastError::EnumerationLimit { .. })
        ));
    }

    #[test]
    fn outputs_stay_inside_the_span() {
        let ls: Vec<u64> = (0..64u64).map(|i| 1 + (i * 31) % 5).collect();
        let b = inst(&ls);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5000 {
            let (s, k) = (5usize, 5u32);
            let o = random_select(&b, s, k, &mut rng).unwrap();
            assert!(s + o.j <= o.i);
            assert!(o.i + o.j <= s + (1 << k));
        }
    }
}
