//! Named instance families.

use std::fmt;

use super::{BlockRepresentation, InstanceError};

/// Families used throughout the experiments.
///
/// * `Ones { m }`: `m` unit blocks (the fully selective game).
/// * `Geometric { m }`: lengths `1, 2, 4, ..., 2^(m-1)`.
/// * `Cantor { k }`: `C_1 = (1, 1, 1)`, `C_k = C_{k-1} . (3^(k-1)) . C_{k-1}`.
/// * `Separation { k, h }`: `S_1` is `2k` unit blocks and
///   `S_h = ((k-1) S_{h-1}) . (2 (2k)^(h-1)) . ((k-1) S_{h-1})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Ones { m: usize },
    Geometric { m: u32 },
    Cantor { k: u32 },
    Separation { k: u64, h: u32 },
}

/// Upper limit on the number of blocks a family may generate.
const MAX_FAMILY_BLOCKS: u64 = 1 << 24;

impl Family {
    pub fn build(&self) -> Result<BlockRepresentation, InstanceError> {
        let lengths = match *self {
            Family::Ones { m } => {
                if m == 0 || m as u64 > MAX_FAMILY_BLOCKS {
                    return Err(param(format!("ones needs 1 <= m <= {MAX_FAMILY_BLOCKS}")));
                }
                vec![1; m]
            }
            Family::Geometric { m } => {
                if !(1..=64).contains(&m) {
                    return Err(param("geometric needs 1 <= m <= 64".into()));
                }
                (0..m).map(|e| 1u64 << e).collect()
            }
            Family::Cantor { k } => {
                if !(1..=20).contains(&k) {
                    return Err(param("cantor needs 1 <= k <= 20".into()));
                }
                let mut ls = vec![1u64; 3];
                for level in 2..=k {
                    let middle = 3u64.pow(level - 1);
                    let mut next = ls.clone();
                    next.push(middle);
                    next.extend_from_slice(&ls);
                    ls = next;
                }
                ls
            }
            Family::Separation { k, h } => SeparationLayout::new(k, h)?.lengths()?,
        };
        BlockRepresentation::from_lengths(lengths)
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Ones { m } => write!(f, "ones({m})"),
            Family::Geometric { m } => write!(f, "geometric({m})"),
            Family::Cantor { k } => write!(f, "cantor({k})"),
            Family::Separation { k, h } => write!(f, "separation({k},{h})"),
        }
    }
}

fn param(msg: String) -> InstanceError {
    InstanceError::FamilyParameter(msg)
}

/// Shape of a separation instance, known to the forecaster that exploits it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeparationLayout {
    k: u64,
    h: u32,
}

impl SeparationLayout {
    pub fn new(k: u64, h: u32) -> Result<Self, InstanceError> {
        if k < 2 || h < 1 {
            return Err(param("separation needs k >= 2 and h >= 1".into()));
        }
        let layout = Self { k, h };
        match layout.checked_block_count(h) {
            Some(m) if m <= MAX_FAMILY_BLOCKS => Ok(layout),
            _ => Err(param(format!(
                "separation({k},{h}) exceeds {MAX_FAMILY_BLOCKS} blocks"
            ))),
        }
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn h(&self) -> u32 {
        self.h
    }

    fn checked_block_count(&self, level: u32) -> Option<u64> {
        let mut m = 2u64.checked_mul(self.k)?;
        for _ in 2..=level {
            m = m.checked_mul(2)?.checked_add(1)?;
        }
        Some(m)
    }

    /// Number of blocks in the level-`level` instance.
    pub fn blocks_at(&self, level: u32) -> usize {
        self.checked_block_count(level).expect("validated at construction") as usize
    }

    /// Number of blocks in the full instance.
    pub fn m(&self) -> usize {
        self.blocks_at(self.h)
    }

    fn lengths(&self) -> Result<Vec<u64>, InstanceError> {
        let k = self.k;
        let overflow = || param(format!("separation({k},{}) lengths overflow", self.h));
        let mut ls = vec![1u64; 2 * k as usize];
        // (2k)^(level-1), tracked in u128 so the final total may reach 2^64
        let mut scale: u128 = 1;
        for _level in 2..=self.h {
            scale = scale.checked_mul(2 * k as u128).ok_or_else(overflow)?;
            let middle = u64::try_from(2 * scale).map_err(|_| overflow())?;
            let scaled: Vec<u64> = ls
                .iter()
                .map(|&l| l.checked_mul(k - 1).ok_or_else(overflow))
                .collect::<Result<_, _>>()?;
            let mut next = Vec::with_capacity(2 * scaled.len() + 1);
            next.extend_from_slice(&scaled);
            next.push(middle);
            next.extend_from_slice(&scaled);
            ls = next;
        }
        Ok(ls)
    }

    /// Recognizes an instance generated by `Family::Separation`.
    pub fn recognize(b: &BlockRepresentation) -> Option<Self> {
        let m = b.m() as u64;
        let mut level = 1u32;
        loop {
            // m = 2^(level-1) (2k + 1) - 1
            let pow = 1u64.checked_shl(level - 1)?;
            if pow > m + 1 {
                return None;
            }
            if (m + 1).is_multiple_of(pow) {
                let odd = (m + 1) / pow;
                let k = (odd - 1) / 2;
                if odd % 2 == 1 && k >= 2 {
                    if let Ok(layout) = Self::new(k, level) {
                        if layout.m() as u64 == m
                            && layout.lengths().ok().as_deref() == Some(b.lengths())
                        {
                            return Some(layout);
                        }
                    }
                }
            }
            level += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::approximate_uniformity;
    use num::BigRational;

    #[test]
    fn cantor_two_unrolled() {
        let b = Family::Cantor { k: 2 }.build().unwrap();
        assert_eq!(b.lengths(), &[1, 1, 1, 3, 1, 1, 1]);
        assert_eq!(b.n(), 9);
    }

    #[test]
    fn cantor_sizes() {
        for k in 1..=8u32 {
            let b = Family::Cantor { k }.build().unwrap();
            assert_eq!(b.n(), 3u128.pow(k));
            assert_eq!(b.m(), (1usize << (k + 1)) - 1);
        }
    }

    #[test]
    fn separation_unrolled() {
        let b = Family::Separation { k: 2, h: 2 }.build().unwrap();
        assert_eq!(b.lengths(), &[1, 1, 1, 1, 8, 1, 1, 1, 1]);
        assert_eq!(b.n(), 16);
    }

    #[test]
    fn separation_sizes_and_uniformity() {
        for k in 2..=4u64 {
            for h in 1..=4u32 {
                let b = Family::Separation { k, h }.build().unwrap();
                assert_eq!(b.n(), (2 * k as u128).pow(h));
                let u = approximate_uniformity(&b);
                assert_eq!(u.ratio(), BigRational::from_integer((2 * k).into()));
                assert_eq!(SeparationLayout::recognize(&b), Some(SeparationLayout::new(k, h).unwrap()));
            }
        }
    }

    #[test]
    fn separation_total_reaches_two_to_the_64() {
        let b = Family::Separation { k: 8, h: 16 }.build().unwrap();
        assert_eq!(b.n(), 1u128 << 64);
        assert_eq!(b.m(), (1 << 15) * 17 - 1);
    }

    #[test]
    fn recognize_rejects_other_instances() {
        let b = Family::Ones { m: 9 }.build().unwrap();
        assert_eq!(SeparationLayout::recognize(&b), None);
        // ones(4) is separation(2, 1)
        let b = Family::Ones { m: 4 }.build().unwrap();
        assert_eq!(SeparationLayout::recognize(&b), Some(SeparationLayout::new(2, 1).unwrap()));
    }

    #[test]
    fn geometric_total() {
        let b = Family::Geometric { m: 64 }.build().unwrap();
        assert_eq!(b.n(), u64::MAX as u128);
    }

    #[test]
    fn parameter_bounds() {
        assert!(Family::Ones { m: 0 }.build().is_err());
        assert!(Family::Geometric { m: 65 }.build().is_err());
        assert!(Family::Cantor { k: 0 }.build().is_err());
        assert!(Family::Separation { k: 1, h: 2 }.build().is_err());
        assert!(Family::Separation { k: 2, h: 0 }.build().is_err());
        assert!(Family::Separation { k: 2, h: 60 }.build().is_err());
    }
}
