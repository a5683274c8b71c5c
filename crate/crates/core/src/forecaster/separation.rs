//! Forecaster that exploits the recursive shape of separation instances.

use num::{BigInt, BigRational, One, ToPrimitive};
use rand::{Rng, RngCore};

use super::{BlockForecast, BlockForecaster, Estimator, ForecastError, ForecastLaw, LawEntry};
use crate::instance::{BlockRepresentation, SeparationLayout};

/// At level `h'`, stops with probability `1/h'` and predicts that the right
/// half repeats the left half (ignoring the middle block); otherwise descends
/// into either half with probability 1/2. At level 1 the first `k` blocks
/// predict the last `k`.
#[derive(Debug, Clone)]
pub struct SeparationForecaster {
    blocks: BlockRepresentation,
    layout: SeparationLayout,
}

impl SeparationForecaster {
    pub fn new(blocks: BlockRepresentation) -> Result<Self, ForecastError> {
        let layout = SeparationLayout::recognize(&blocks).ok_or(ForecastError::NotSeparation)?;
        Ok(Self { blocks, layout })
    }

    pub fn layout(&self) -> SeparationLayout {
        self.layout
    }

    // decision once the walk stops at `level`, with the sub-instance
    // starting at block `start`
    fn stop(&self, start: usize, level: u32) -> BlockForecast {
        if level == 1 {
            let k = self.layout.k() as usize;
            return BlockForecast {
                source: Estimator::Blocks(start..start + k),
                target: start + k..start + 2 * k,
            };
        }
        let half = self.layout.blocks_at(level - 1);
        BlockForecast {
            source: Estimator::Blocks(start..start + half),
            target: start + half + 1..start + 2 * half + 1,
        }
    }

    fn walk(&self, start: usize, level: u32, weight: BigRational, out: &mut Vec<LawEntry>) {
        let stop_here = BigRational::new(BigInt::one(), BigInt::from(level));
        let stopped = &weight * &stop_here;
        out.push(LawEntry {
            forecast: self.stop(start, level),
            probability: stopped.to_f64().unwrap_or(0.0),
            exact: Some(stopped),
        });
        if level == 1 {
            return;
        }
        let half = self.layout.blocks_at(level - 1);
        let each = weight * (BigRational::one() - stop_here) / BigInt::from(2);
        self.walk(start, level - 1, each.clone(), out);
        self.walk(start + half + 1, level - 1, each, out);
    }
}

impl BlockForecaster for SeparationForecaster {
    fn name(&self) -> &'static str {
        "separation"
    }

    fn instance(&self) -> &BlockRepresentation {
        &self.blocks
    }

    fn decide(&self, rng: &mut dyn RngCore) -> BlockForecast {
        let mut start = 0;
        let mut level = self.layout.h();
        while level > 1 && !rng.random_bool(1.0 / level as f64) {
            if rng.random_bool(0.5) {
                start += self.layout.blocks_at(level - 1) + 1;
            }
            level -= 1;
        }
        self.stop(start, level)
    }

    fn law(&self) -> Result<ForecastLaw, ForecastError> {
        let mut entries = Vec::new();
        self.walk(0, self.layout.h(), BigRational::one(), &mut entries);
        Ok(ForecastLaw { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecaster::{play, SliceReader};
    use crate::instance::Family;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sep(k: u64, h: u32) -> BlockRepresentation {
        Family::Separation { k, h }.build().unwrap()
    }

    #[test]
    fn level_one_is_forced() {
        let f = SeparationForecaster::new(sep(2, 1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (p, mu, err) = play(&f, &[0.0, 0.0, 1.0, 1.0], &mut rng).unwrap();
        assert_eq!((p.t, p.w, p.mu_hat, mu, err), (2, 2, 0.0, 1.0, 1.0));
    }

    #[test]
    fn level_two_has_three_branches() {
        let f = SeparationForecaster::new(sep(2, 2)).unwrap();
        let law = f.law().unwrap();
        let probs: Vec<_> = law.entries.iter().map(|e| e.exact.clone().unwrap()).collect();
        let q = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(probs, vec![q(1, 2), q(1, 4), q(1, 4)]);
        let b = f.instance();
        let top = &law.entries[0].forecast;
        assert_eq!(top.source, Estimator::Blocks(0..4));
        assert_eq!(top.target, 5..9);
        assert_eq!((top.time(b), top.window(b)), (12, 4));
        let right = &law.entries[2].forecast;
        assert_eq!(right.source, Estimator::Blocks(5..7));
        assert_eq!(right.target, 7..9);
    }

    #[test]
    fn law_is_complete() {
        let f = SeparationForecaster::new(sep(3, 6)).unwrap();
        let law = f.law().unwrap();
        assert_eq!(law.entries.len(), (1 << 6) - 1);
        let total: BigRational = law.entries.iter().map(|e| e.exact.clone().unwrap()).sum();
        assert_eq!(total, BigRational::one());
    }

    #[test]
    fn sampling_follows_the_law() {
        let f = SeparationForecaster::new(sep(2, 3)).unwrap();
        let law = f.law().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 100_000;
        let mut counts = vec![0usize; law.entries.len()];
        for _ in 0..trials {
            let d = f.decide(&mut rng);
            let idx = law.entries.iter().position(|e| e.forecast == d).unwrap();
            counts[idx] += 1;
        }
        for (e, c) in law.entries.iter().zip(counts) {
            let p = e.probability;
            let sd = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((c as f64 / trials as f64 - p).abs() <= 4.0 * sd + 1e-12);
        }
    }

    #[test]
    fn rejects_other_instances() {
        let b = BlockRepresentation::from_lengths(vec![1, 2, 3]).unwrap();
        assert_eq!(
            SeparationForecaster::new(b).unwrap_err(),
            ForecastError::NotSeparation
        );
    }

    #[test]
    fn constant_input_through_reader() {
        let b = sep(2, 2);
        let x = vec![0.25; b.n() as usize];
        let f = SeparationForecaster::new(b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let p = f.forecast(&mut SliceReader::new(&x), &mut rng).unwrap();
            assert_eq!(p.mu_hat, 0.25);
        }
    }
}
