//! PLS instances.
//!
//! An instance is a sequence length `n` together with the set of timesteps at
//! which the forecaster may stop and predict. It has two interchangeable
//! encodings: the [`StoppingTimeSet`] itself and the [`BlockRepresentation`],
//! the list of gaps between consecutive stopping times.
//!
//! Block numbers in the public API (uniformity witnesses, merge cuts) are
//! 1-based, matching the way blocks are usually written `l_1, ..., l_m`.
//! Slices and ranges over `lengths()` are ordinary 0-based Rust indices.
//!
//! A stopping set that does not contain 0 is normalized by shifting: the
//! smallest stopping time becomes the block representation's `origin`, and
//! every block-relative timestep is measured from it.

mod family;
mod merge;
mod uniformity;

pub use family::{Family, SeparationLayout};
pub use merge::{greedy_merge, MergePlan};
pub use uniformity::{
    approximate_uniformity, approximate_uniformity_bruteforce, ApproximateUniformity,
    BRUTEFORCE_MAX_BLOCKS,
};

use std::ops::Range;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("stopping time set is empty")]
    EmptyStoppingSet,
    #[error("sequence length must be positive")]
    ZeroLength,
    #[error("stopping times must be strictly increasing (violated at position {0})")]
    NotIncreasing(usize),
    #[error("stopping time {time} is outside [0, {n})")]
    OutOfRange { time: u128, n: u128 },
    #[error("instance has no blocks")]
    NoBlocks,
    #[error("block {0} has zero length")]
    ZeroBlock(usize),
    #[error("sequence length overflows")]
    Overflow,
    #[error("instance has {m} blocks; the brute-force oracle accepts at most {limit}")]
    TooLarge { m: usize, limit: usize },
    #[error("invalid family parameters: {0}")]
    FamilyParameter(String),
    #[error("invalid merge plan: {0}")]
    InvalidMerge(String),
    #[error("merge factor must be a finite number greater than 1, got {0}")]
    MergeFactor(f64),
}

/// Sequence length `n` and the allowed stopping times, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StoppingTimeSet {
    n: u128,
    times: Vec<u128>,
}

impl StoppingTimeSet {
    pub fn new(n: u128, times: Vec<u128>) -> Result<Self, InstanceError> {
        if n == 0 {
            return Err(InstanceError::ZeroLength);
        }
        if times.is_empty() {
            return Err(InstanceError::EmptyStoppingSet);
        }
        for (pos, pair) in times.windows(2).enumerate() {
            if pair[0] >= pair[1] {
                return Err(InstanceError::NotIncreasing(pos + 1));
            }
        }
        let last = *times.last().expect("non-empty");
        if last >= n {
            return Err(InstanceError::OutOfRange { time: last, n });
        }
        Ok(Self { n, times })
    }

    /// Fully selective instance: every timestep `0..n` is a stopping time.
    pub fn full(n: u128) -> Result<Self, InstanceError> {
        Self::new(n, (0..n).collect())
    }

    pub fn n(&self) -> u128 {
        self.n
    }

    pub fn times(&self) -> &[u128] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn contains(&self, t: u128) -> bool {
        self.times.binary_search(&t).is_ok()
    }

    pub fn to_blocks(&self) -> BlockRepresentation {
        to_blocks(self)
    }
}

/// Block lengths `l_1..l_m` plus the shift applied when the first stopping
/// time is not 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockRepresentation {
    lengths: Vec<u64>,
    origin: u128,
    // prefix[i] = l_1 + ... + l_i
    prefix: Vec<u128>,
}

impl BlockRepresentation {
    pub fn new(lengths: Vec<u64>, origin: u128) -> Result<Self, InstanceError> {
        if lengths.is_empty() {
            return Err(InstanceError::NoBlocks);
        }
        let mut prefix = Vec::with_capacity(lengths.len() + 1);
        prefix.push(0u128);
        let mut acc = 0u128;
        for (idx, &l) in lengths.iter().enumerate() {
            if l == 0 {
                return Err(InstanceError::ZeroBlock(idx + 1));
            }
            acc = acc.checked_add(l as u128).ok_or(InstanceError::Overflow)?;
            prefix.push(acc);
        }
        acc.checked_add(origin).ok_or(InstanceError::Overflow)?;
        Ok(Self {
            lengths,
            origin,
            prefix,
        })
    }

    /// Instance with origin 0.
    pub fn from_lengths(lengths: Vec<u64>) -> Result<Self, InstanceError> {
        Self::new(lengths, 0)
    }

    pub fn lengths(&self) -> &[u64] {
        &self.lengths
    }

    /// Number of blocks `m`.
    pub fn m(&self) -> usize {
        self.lengths.len()
    }

    pub fn origin(&self) -> u128 {
        self.origin
    }

    /// Sum of all block lengths (the sequence length after the shift).
    pub fn total(&self) -> u128 {
        self.prefix[self.lengths.len()]
    }

    /// Sequence length of the underlying stopping time set.
    pub fn n(&self) -> u128 {
        self.total() + self.origin
    }

    /// Total length of the first `count` blocks.
    pub fn prefix(&self, count: usize) -> u128 {
        self.prefix[count]
    }

    /// Total length of a 0-based range of blocks.
    pub fn range_total(&self, range: Range<usize>) -> u128 {
        self.prefix[range.end] - self.prefix[range.start]
    }

    /// Relative timestep at which 0-based block `idx` starts; always a
    /// stopping time once shifted by `origin`.
    pub fn block_start(&self, idx: usize) -> u128 {
        self.prefix[idx]
    }

    /// 0-based index of the block that starts at relative timestep `t`.
    pub fn block_starting_at(&self, t: u128) -> Option<usize> {
        let idx = self.prefix[..self.lengths.len()].binary_search(&t).ok()?;
        Some(idx)
    }

    /// Instance formed by a contiguous 0-based range of blocks, with the
    /// origin moved to where the range starts.
    pub fn slice(&self, range: Range<usize>) -> Result<Self, InstanceError> {
        let origin = self.origin + self.prefix[range.start];
        Self::new(self.lengths[range].to_vec(), origin)
    }

    pub fn to_stopping_times(&self) -> StoppingTimeSet {
        from_blocks(self)
    }

    /// Short human-readable identifier used in reports.
    pub fn describe(&self) -> String {
        const SHOWN: usize = 12;
        let mut parts: Vec<String> = self
            .lengths
            .iter()
            .take(SHOWN)
            .map(|l| l.to_string())
            .collect();
        if self.lengths.len() > SHOWN {
            parts.push(format!("...({} blocks)", self.lengths.len()));
        }
        if self.origin == 0 {
            format!("blocks[{}]", parts.join(" "))
        } else {
            format!("blocks[{}]@{}", parts.join(" "), self.origin)
        }
    }
}

/// Gap encoding of a stopping time set; `origin` is the first stopping time.
pub fn to_blocks(ts: &StoppingTimeSet) -> BlockRepresentation {
    let times = ts.times();
    let mut lengths = Vec::with_capacity(times.len());
    for pair in times.windows(2) {
        lengths.push(narrow(pair[1] - pair[0]));
    }
    lengths.push(narrow(ts.n() - times[times.len() - 1]));
    BlockRepresentation::new(lengths, times[0]).expect("valid stopping set yields valid blocks")
}

/// Inverse of [`to_blocks`].
pub fn from_blocks(b: &BlockRepresentation) -> StoppingTimeSet {
    let times = (0..b.m()).map(|i| b.origin() + b.block_start(i)).collect();
    StoppingTimeSet::new(b.n(), times).expect("valid blocks yield a valid stopping set")
}

// Gaps wider than u64 cannot be represented as block lengths.
fn narrow(gap: u128) -> u64 {
    u64::try_from(gap).expect("block length exceeds u64")
}

impl From<&StoppingTimeSet> for BlockRepresentation {
    fn from(ts: &StoppingTimeSet) -> Self {
        to_blocks(ts)
    }
}

impl From<&BlockRepresentation> for StoppingTimeSet {
    fn from(b: &BlockRepresentation) -> Self {
        from_blocks(b)
    }
}
