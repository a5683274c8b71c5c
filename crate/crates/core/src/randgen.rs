//! Random stopping time sets and k-monotone inclusion probabilities.

use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use rand::seq::index::sample;
use rand::Rng;
use thiserror::Error;

use crate::instance::StoppingTimeSet;

/// Harmonic numbers up to this index are returned exactly.
pub const HARMONIC_EXACT_MAX: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RandgenError {
    #[error("probability sequence is empty")]
    Empty,
    #[error("probability {value} at index {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("probabilities sum to zero")]
    AllZero,
    #[error("harmonic numbers start at n = 1")]
    HarmonicIndex,
    #[error("invalid generator parameters: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// All values in the run are equal.
    Flat,
    NonDecreasing,
    NonIncreasing,
}

/// A maximal monotone stretch `start..=end` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Run {
    pub start: usize,
    pub end: usize,
    pub direction: Direction,
}

impl Run {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Greedy decomposition into monotone runs. Each run is extended as far as
/// monotonicity allows; equal neighbours never break a run. Since any
/// sub-interval of a monotone run is monotone, the greedy count is minimal.
pub fn monotone_runs(values: &[f64]) -> Vec<Run> {
    let mut runs = Vec::new();
    let mut idx = 0;
    while idx < values.len() {
        let start = idx;
        let mut direction = Direction::Flat;
        while idx + 1 < values.len() {
            let (a, b) = (values[idx], values[idx + 1]);
            let step = if b > a {
                Direction::NonDecreasing
            } else if b < a {
                Direction::NonIncreasing
            } else {
                Direction::Flat
            };
            match (direction, step) {
                (_, Direction::Flat) => {}
                (Direction::Flat, s) => direction = s,
                (d, s) if d == s => {}
                _ => break,
            }
            idx += 1;
        }
        runs.push(Run {
            start,
            end: idx,
            direction,
        });
        idx += 1;
    }
    runs
}

/// Inclusion probabilities `p*_0..p*_{n-1}` with their greedy run
/// decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilitySequence {
    values: Vec<f64>,
    runs: Vec<Run>,
}

impl ProbabilitySequence {
    pub fn new(values: Vec<f64>) -> Result<Self, RandgenError> {
        if values.is_empty() {
            return Err(RandgenError::Empty);
        }
        if let Some(index) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(RandgenError::OutOfRange {
                index,
                value: values[index],
            });
        }
        let runs = monotone_runs(&values);
        Ok(Self { values, runs })
    }

    pub fn constant(n: usize, p: f64) -> Result<Self, RandgenError> {
        if n == 0 {
            return Err(RandgenError::Empty);
        }
        Self::new(vec![p; n])
    }

    /// Random sequence made of `k` monotone pieces of random lengths, with
    /// alternating directions and uniform values.
    pub fn random_k_monotone<R: Rng + ?Sized>(
        k: usize,
        n: usize,
        rng: &mut R,
    ) -> Result<Self, RandgenError> {
        if k == 0 || n < k {
            return Err(RandgenError::Parameter(format!(
                "need 1 <= k <= n, got k={k}, n={n}"
            )));
        }
        let mut cuts: Vec<usize> = sample(rng, n - 1, k - 1)
            .into_iter()
            .map(|c| c + 1)
            .collect();
        cuts.sort_unstable();
        cuts.insert(0, 0);
        cuts.push(n);
        let mut values = Vec::with_capacity(n);
        for (piece, pair) in cuts.windows(2).enumerate() {
            let mut chunk: Vec<f64> = (pair[0]..pair[1]).map(|_| rng.random::<f64>()).collect();
            chunk.sort_by(f64::total_cmp);
            if piece % 2 == 1 {
                chunk.reverse();
            }
            values.extend(chunk);
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of greedy runs, used as the monotonicity parameter `k`.
    pub fn run_count(&self) -> usize {
        self.runs.len()
    }

    /// `m0 = sum p*`.
    pub fn expected_size(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn exact_sum(&self) -> BigRational {
        exact_sum(&self.values)
    }
}

fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("probabilities are finite")
}

// Every double in [0, 1] is an integer multiple of 2^-1074, so summing the
// scaled mantissas avoids a gcd per addition.
fn exact_sum(values: &[f64]) -> BigRational {
    const SHIFT: i32 = 1100;
    let total: BigInt = values
        .iter()
        .map(|&v| {
            let (mantissa, exp, _) = num::Float::integer_decode(v);
            BigInt::from(mantissa) << (SHIFT + i32::from(exp)) as usize
        })
        .sum();
    BigRational::new(total, BigInt::one() << SHIFT as usize)
}

/// Outcome of one draw; an empty set is a legitimate result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StoppingDraw {
    Empty,
    Set(StoppingTimeSet),
}

impl StoppingDraw {
    pub fn set(&self) -> Option<&StoppingTimeSet> {
        match self {
            StoppingDraw::Empty => None,
            StoppingDraw::Set(s) => Some(s),
        }
    }
}

/// Includes each `t` independently with probability `p*_t`.
pub fn sample_stopping_set<R: Rng + ?Sized>(p: &ProbabilitySequence, rng: &mut R) -> StoppingDraw {
    let times: Vec<u128> = p
        .values
        .iter()
        .enumerate()
        .filter(|&(_, &pt)| rng.random_bool(pt))
        .map(|(t, _)| t as u128)
        .collect();
    if times.is_empty() {
        return StoppingDraw::Empty;
    }
    let set = StoppingTimeSet::new(p.len() as u128, times).expect("sorted distinct times below n");
    StoppingDraw::Set(set)
}

/// `H_n`, exact up to [`HARMONIC_EXACT_MAX`].
#[derive(Debug, Clone, PartialEq)]
pub enum Harmonic {
    Exact(BigRational),
    Approx(f64),
}

impl Harmonic {
    pub fn to_f64(&self) -> f64 {
        match self {
            Harmonic::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Harmonic::Approx(v) => *v,
        }
    }
}

// sum of 1/i over a..b as an unreduced fraction, by binary splitting
fn harmonic_range(a: u64, b: u64) -> (BigInt, BigInt) {
    if b - a == 1 {
        return (BigInt::one(), BigInt::from(a));
    }
    let mid = a + (b - a) / 2;
    let (p1, q1) = harmonic_range(a, mid);
    let (p2, q2) = harmonic_range(mid, b);
    (p1 * &q2 + p2 * &q1, q1 * q2)
}

fn exact_harmonic(n: u64) -> BigRational {
    let (p, q) = harmonic_range(1, n + 1);
    BigRational::new(p, q)
}

pub fn harmonic(n: u64) -> Result<Harmonic, RandgenError> {
    if n == 0 {
        return Err(RandgenError::HarmonicIndex);
    }
    if n <= HARMONIC_EXACT_MAX {
        return Ok(Harmonic::Exact(exact_harmonic(n)));
    }
    // Euler-Maclaurin; the first omitted term is below 1/(252 n^6)
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let x = n as f64;
    let inv2 = 1.0 / (x * x);
    let tail = 1.0 / (2.0 * x) - inv2 / 12.0 + inv2 * inv2 / 120.0;
    Ok(Harmonic::Approx(x.ln() + EULER_GAMMA + tail))
}

/// Contiguous 0-based window `i..=j` certified by [`heavy_subsequence`].
#[derive(Debug, Clone, PartialEq)]
pub struct HeavySubsequence {
    pub i: usize,
    pub j: usize,
    /// The run the window was taken from.
    pub run: Run,
}

impl HeavySubsequence {
    pub fn len(&self) -> usize {
        self.j - self.i + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Checks `(j - i + 1) * min(p*_i..p*_j) >= sum(p*) / (k H_n)` exactly,
    /// with `k` the run count.
    pub fn certify(&self, p: &ProbabilitySequence) -> bool {
        let min = p.values[self.i..=self.j]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let lhs = exact(min) * BigInt::from(self.len());
        let k = BigInt::from(p.run_count());
        match harmonic(p.len() as u64) {
            Ok(Harmonic::Exact(h)) => lhs * h * k >= p.exact_sum(),
            Ok(Harmonic::Approx(h)) => {
                // H_n is rounded up so the check stays sound
                let h_up = h * (1.0 + 1e-12);
                lhs.to_f64().unwrap_or(0.0) * h_up * p.run_count() as f64
                    >= p.expected_size()
            }
            Err(_) => false,
        }
    }
}

/// Picks the run with the largest sum, then the best tail (non-decreasing
/// run) or head (non-increasing run) of it, maximizing length times the
/// entry at the window's low end. Ties go to the earliest candidate.
pub fn heavy_subsequence(p: &ProbabilitySequence) -> Result<HeavySubsequence, RandgenError> {
    let values = p.values();
    let sums: Vec<BigRational> = p
        .runs
        .iter()
        .map(|r| exact_sum(&values[r.start..=r.end]))
        .collect();
    let (best, best_sum) = sums
        .iter()
        .enumerate()
        .fold(None::<(usize, &BigRational)>, |acc, (idx, s)| match acc {
            Some((_, cur)) if cur >= s => acc,
            _ => Some((idx, s)),
        })
        .expect("at least one run");
    if best_sum.is_zero() {
        return Err(RandgenError::AllZero);
    }
    let run = p.runs[best];
    let score = |len: usize, v: f64| exact(v) * BigInt::from(len);
    let (i, j) = match run.direction {
        Direction::NonIncreasing => {
            let mut best = (run.start, score(1, values[run.start]));
            for j in run.start + 1..=run.end {
                let s = score(j - run.start + 1, values[j]);
                if s > best.1 {
                    best = (j, s);
                }
            }
            (run.start, best.0)
        }
        Direction::NonDecreasing | Direction::Flat => {
            let mut best = (run.start, score(run.len(), values[run.start]));
            for i in run.start + 1..=run.end {
                let s = score(run.end - i + 1, values[i]);
                if s > best.1 {
                    best = (i, s);
                }
            }
            (best.0, run.end)
        }
    };
    Ok(HeavySubsequence { i, j, run })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn seq(v: &[f64]) -> ProbabilitySequence {
        ProbabilitySequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn runs_of_small_sequences() {
        assert_eq!(seq(&[0.1, 0.2, 0.4, 0.8]).run_count(), 1);
        let r = seq(&[0.5, 0.2, 0.3]);
        assert_eq!(r.runs().len(), 2);
        assert_eq!((r.runs()[0].start, r.runs()[0].end), (0, 1));
        assert_eq!(r.runs()[0].direction, Direction::NonIncreasing);
        assert_eq!((r.runs()[1].start, r.runs()[1].end), (2, 2));
        assert_eq!(seq(&[0.3; 5]).run_count(), 1);
        // a flat stretch joins whichever direction follows
        let f = seq(&[0.2, 0.2, 0.1, 0.1, 0.5]);
        assert_eq!(f.run_count(), 2);
        assert_eq!(f.runs()[0].end, 3);
    }

    // minimal partition into monotone pieces by dynamic programming
    fn minimal_runs(v: &[f64]) -> usize {
        let mono = |a: usize, b: usize| {
            let s = &v[a..=b];
            s.windows(2).all(|w| w[0] <= w[1]) || s.windows(2).all(|w| w[0] >= w[1])
        };
        let n = v.len();
        let mut best = vec![usize::MAX; n + 1];
        best[0] = 0;
        for end in 1..=n {
            for start in 0..end {
                if best[start] != usize::MAX && mono(start, end - 1) {
                    best[end] = best[end].min(best[start] + 1);
                }
            }
        }
        best[n]
    }

    #[test]
    fn greedy_runs_are_minimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..2000 {
            let n = rng.random_range(1..=12);
            // small alphabet so ties are common
            let v: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..4u8)) / 4.0).collect();
            let runs = monotone_runs(&v);
            assert_eq!(runs.len(), minimal_runs(&v), "{v:?}");
            for r in &runs {
                let s = &v[r.start..=r.end];
                assert!(s.windows(2).all(|w| w[0] <= w[1]) || s.windows(2).all(|w| w[0] >= w[1]));
            }
        }
    }

    #[test]
    fn harmonic_values() {
        assert_eq!(harmonic(1).unwrap(), Harmonic::Exact(q(1, 1)));
        assert_eq!(harmonic(2).unwrap(), Harmonic::Exact(q(3, 2)));
        assert_eq!(harmonic(4).unwrap(), Harmonic::Exact(q(25, 12)));
        assert!(harmonic(0).is_err());
        let exact = harmonic(HARMONIC_EXACT_MAX).unwrap().to_f64();
        let x = HARMONIC_EXACT_MAX as f64;
        let approx = x.ln() + 0.577_215_664_901_532_9 + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x);
        assert!(((exact - approx) / exact).abs() < 1e-12);
        assert!(matches!(harmonic(HARMONIC_EXACT_MAX + 1).unwrap(), Harmonic::Approx(_)));
    }

    #[test]
    fn heavy_on_increasing_sequence() {
        let p = seq(&[0.1, 0.2, 0.4, 0.8]);
        let h = heavy_subsequence(&p).unwrap();
        // candidates: 4*0.1, 3*0.2, 2*0.4, 1*0.8; the first 0.8 wins the tie
        assert_eq!((h.i, h.j), (2, 3));
        assert!(h.certify(&p));
    }

    #[test]
    fn heavy_on_constant_sequence() {
        let p = ProbabilitySequence::constant(50, 0.2).unwrap();
        let h = heavy_subsequence(&p).unwrap();
        assert_eq!((h.i, h.j), (0, 49));
        assert!(h.certify(&p));
    }

    #[test]
    fn heavy_on_decreasing_sequence() {
        let p = seq(&[0.9, 0.5, 0.45, 0.1]);
        let h = heavy_subsequence(&p).unwrap();
        assert_eq!((h.i, h.j), (0, 2));
        assert!(h.certify(&p));
    }

    #[test]
    fn heavy_rejects_zero_mass() {
        assert_eq!(
            heavy_subsequence(&seq(&[0.0, 0.0])).unwrap_err(),
            RandgenError::AllZero
        );
    }

    #[test]
    fn random_k_monotone_respects_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 1..=5 {
            for _ in 0..50 {
                let p = ProbabilitySequence::random_k_monotone(k, 200, &mut rng).unwrap();
                assert!(p.run_count() <= k);
                assert!(heavy_subsequence(&p).unwrap().certify(&p));
            }
        }
        assert!(ProbabilitySequence::random_k_monotone(3, 2, &mut rng).is_err());
    }

    #[test]
    fn degenerate_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let zeros = ProbabilitySequence::constant(10, 0.0).unwrap();
        assert_eq!(sample_stopping_set(&zeros, &mut rng), StoppingDraw::Empty);
        let ones = ProbabilitySequence::constant(10, 1.0).unwrap();
        let full = sample_stopping_set(&ones, &mut rng);
        assert_eq!(full.set().unwrap(), &StoppingTimeSet::full(10).unwrap());
    }

    #[test]
    fn inclusion_marginals() {
        let p = seq(&[0.1, 0.5, 0.9, 0.3]);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let trials = 100_000;
        let mut hits = [0u32; 4];
        for _ in 0..trials {
            if let StoppingDraw::Set(s) = sample_stopping_set(&p, &mut rng) {
                for &t in s.times() {
                    hits[t as usize] += 1;
                }
            }
        }
        for (t, &pt) in p.values().iter().enumerate() {
            let sd = (pt * (1.0 - pt) / trials as f64).sqrt();
            assert!((f64::from(hits[t]) / trials as f64 - pt).abs() <= 4.0 * sd);
        }
    }

    #[test]
    fn rejects_bad_probabilities() {
        assert_eq!(ProbabilitySequence::new(vec![]).unwrap_err(), RandgenError::Empty);
        assert!(matches!(
            ProbabilitySequence::new(vec![0.5, 1.5]),
            Err(RandgenError::OutOfRange { index: 1, .. })
        ));
        assert!(ProbabilitySequence::new(vec![f64::NAN]).is_err());
    }
}
