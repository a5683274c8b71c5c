//! Merges: coarser instances obtained by joining consecutive blocks and
//! keeping a contiguous run of the joined blocks.

use num::{BigInt, BigRational, One};

use super::{approximate_uniformity, BlockRepresentation, InstanceError};

/// A merge of a source instance, witnessed by cut indices
/// `i_1 < i_2 < ... < i_{m'+1}` (1-based, each in `1..=m+1`); merged block
/// `j` spans source blocks `i_j ..= i_{j+1} - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergePlan {
    cuts: Vec<usize>,
    merged: Vec<u64>,
}

impl MergePlan {
    /// Validates `cuts` against `source` and computes the merged lengths.
    pub fn new(source: &BlockRepresentation, cuts: Vec<usize>) -> Result<Self, InstanceError> {
        if cuts.len() < 2 {
            return Err(InstanceError::InvalidMerge(
                "a merge needs at least one block (two cuts)".into(),
            ));
        }
        if cuts[0] < 1 || *cuts.last().expect("non-empty") > source.m() + 1 {
            return Err(InstanceError::InvalidMerge(format!(
                "cuts must lie in 1..={}",
                source.m() + 1
            )));
        }
        let mut merged = Vec::with_capacity(cuts.len() - 1);
        for pair in cuts.windows(2) {
            if pair[0] >= pair[1] {
                return Err(InstanceError::InvalidMerge(
                    "cuts must be strictly increasing".into(),
                ));
            }
            let total = source.range_total(pair[0] - 1..pair[1] - 1);
            merged.push(u64::try_from(total).map_err(|_| InstanceError::Overflow)?);
        }
        Ok(Self { cuts, merged })
    }

    pub fn cuts(&self) -> &[usize] {
        &self.cuts
    }

    pub fn merged_lengths(&self) -> &[u64] {
        &self.merged
    }

    /// Number of merged blocks `m'`.
    pub fn len(&self) -> usize {
        self.merged.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merged.is_empty()
    }

    /// Checks every merged length against the source.
    pub fn is_merge_of(&self, source: &BlockRepresentation) -> bool {
        MergePlan::new(source, self.cuts.clone()).is_ok_and(|p| p.merged == self.merged)
    }

    /// The merged instance, its origin placed where source block `i_1` starts.
    pub fn to_instance(&self, source: &BlockRepresentation) -> BlockRepresentation {
        let origin = source.origin() + source.prefix(self.cuts[0] - 1);
        BlockRepresentation::new(self.merged.clone(), origin).expect("merged blocks are valid")
    }

    /// `max / min` of the merged lengths.
    pub fn spread(&self) -> BigRational {
        let max = *self.merged.iter().max().expect("non-empty");
        let min = *self.merged.iter().min().expect("non-empty");
        BigRational::new(BigInt::from(max), BigInt::from(min))
    }
}

/// Greedy merge of the approximate-uniformity witness interval into blocks
/// of length at least `T = M / (C - 1)`, where `M` is the longest block in
/// the witness.
///
/// The result has at least `floor((1 - 1/C) * m'(L))` blocks, each in
/// `[T, T + M)`, so their ratio of longest to shortest is below `C`. When the
/// witness interval is too short to reach `T` even once, the whole interval
/// becomes a single merged block.
pub fn greedy_merge(b: &BlockRepresentation, c: f64) -> Result<MergePlan, InstanceError> {
    if !c.is_finite() || c <= 1.0 {
        return Err(InstanceError::MergeFactor(c));
    }
    let factor = BigRational::from_float(c).expect("finite");
    let one = BigRational::one();
    let uniformity = approximate_uniformity(b);
    let (lo, hi) = uniformity.witness;
    let max = BigRational::from_integer(BigInt::from(uniformity.max));
    let stretch = &factor - &one;
    // sum >= T  <=>  sum * (C - 1) >= M
    let reaches = |sum: u128| BigRational::from_integer(BigInt::from(sum)) * &stretch >= max;

    let mut cuts = vec![lo];
    let mut start = lo;
    while start <= hi && reaches(b.range_total(start - 1..hi)) {
        let mut end = start;
        while !reaches(b.range_total(start - 1..end)) {
            end += 1;
        }
        cuts.push(end + 1);
        start = end + 1;
    }
    if cuts.len() == 1 {
        cuts.push(hi + 1);
    }
    let plan = MergePlan::new(b, cuts)?;

    let guaranteed = ((&one - &one / &factor) * uniformity.ratio()).floor();
    assert!(
        BigRational::from_integer(BigInt::from(plan.len())) >= guaranteed,
        "merge too short"
    );
    assert!(plan.spread() <= factor, "merged lengths spread beyond C");
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(ls: &[u64]) -> BlockRepresentation {
        BlockRepresentation::from_lengths(ls.to_vec()).unwrap()
    }

    #[test]
    fn greedy_trace_on_increasing_lengths() {
        let plan = greedy_merge(&inst(&[1, 2, 3, 4, 5, 6]), 2.0).unwrap();
        assert_eq!(plan.cuts(), &[1, 4, 6, 7]);
        assert_eq!(plan.merged_lengths(), &[6, 9, 6]);
    }

    #[test]
    fn explicit_plan_is_a_merge() {
        let source = inst(&[1, 2, 3, 4, 5, 6]);
        let plan = MergePlan::new(&source, vec![2, 4, 6]).unwrap();
        assert_eq!(plan.merged_lengths(), &[5, 9]);
        assert!(plan.is_merge_of(&source));
        let merged = plan.to_instance(&source);
        assert_eq!(merged.origin(), 1);
        assert_eq!(merged.lengths(), &[5, 9]);
    }

    #[test]
    fn unit_blocks_stay_singletons() {
        let plan = greedy_merge(&inst(&[1; 8]), 2.0).unwrap();
        assert_eq!(plan.len(), 8);
        assert_eq!(plan.merged_lengths(), &[1; 8]);
        assert_eq!(plan.cuts(), &[1, 2, 3, 4, 5, 6, 7, 8, 9]);
    }

    #[test]
    fn degenerate_factor_yields_single_block() {
        // m'(L) = 1 for a single block; C close to 1 puts T far above M
        let plan = greedy_merge(&inst(&[5]), 1.01).unwrap();
        assert_eq!(plan.merged_lengths(), &[5]);
        let plan = greedy_merge(&inst(&[3, 4]), 1.1).unwrap();
        assert_eq!(plan.merged_lengths(), &[7]);
    }

    #[test]
    fn rejects_bad_factor_and_cuts() {
        let b = inst(&[1, 2]);
        assert!(matches!(greedy_merge(&b, 1.0), Err(InstanceError::MergeFactor(_))));
        assert!(matches!(greedy_merge(&b, f64::NAN), Err(InstanceError::MergeFactor(_))));
        assert!(MergePlan::new(&b, vec![1]).is_err());
        assert!(MergePlan::new(&b, vec![2, 2]).is_err());
        assert!(MergePlan::new(&b, vec![1, 4]).is_err());
        assert!(MergePlan::new(&b, vec![0, 2]).is_err());
    }
}
