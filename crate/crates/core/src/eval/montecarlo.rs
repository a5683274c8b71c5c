//! Monte Carlo error estimation. Trial `i` draws everything from its own
//! generator seeded by `(master_seed, i)`, and per-trial errors are summed in
//! index order, so estimates do not depend on the number of threads.

use std::collections::BTreeMap;
use std::ops::Range;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use super::{ErrorEstimate, EvalError};
use crate::adversary::{expand, Adversary, AdversaryKind};
use crate::forecaster::{play, BlockForecast, BlockForecaster, Estimator};
use crate::instance::BlockRepresentation;

/// Caps the number of worker threads.
pub const THREADS_ENV: &str = "PLS_THREADS";

// Above this many distinct block lengths the Bernoulli path samples every
// block instead of one binomial per length class.
const MAX_LENGTH_CLASSES: usize = 64;

pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// splitmix64 of the master seed and trial index.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master, index))
}

/// `f(0), ..., f(count - 1)` on a pool of [`thread_count`] threads, in index
/// order. The error of the smallest failing index is returned.
pub fn parallel_map<T, F>(count: u64, f: F) -> Result<Vec<T>, EvalError>
where
    T: Send,
    F: Fn(u64) -> Result<T, EvalError> + Sync + Send,
{
    parallel_map_on(thread_count(), count, f)
}

pub(crate) fn parallel_map_on<T, F>(threads: usize, count: u64, f: F) -> Result<Vec<T>, EvalError>
where
    T: Send,
    F: Fn(u64) -> Result<T, EvalError> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| EvalError::ThreadPool(e.to_string()))?;
    let results: Vec<Result<T, EvalError>> =
        pool.install(|| (0..count).into_par_iter().map(&f).collect());
    results.into_iter().collect()
}

/// Source of full sequences for element-level simulation.
pub trait SequenceSampler: Sync {
    fn sample(&self, rng: &mut dyn RngCore) -> Result<Vec<f64>, EvalError>;
}

/// Block-constant sequences drawn from an adversary.
#[derive(Debug, Clone)]
pub struct AdversarySampler {
    b: BlockRepresentation,
    adversary: Adversary,
}

impl AdversarySampler {
    pub fn new(b: BlockRepresentation, kind: AdversaryKind) -> Result<Self, EvalError> {
        let adversary = Adversary::new(kind, &b)?;
        Ok(Self { b, adversary })
    }
}

impl SequenceSampler for AdversarySampler {
    fn sample(&self, rng: &mut dyn RngCore) -> Result<Vec<f64>, EvalError> {
        let means = self.adversary.sample_block_means(rng);
        Ok(expand(&self.b, &means)?)
    }
}

/// The same value at every step.
#[derive(Debug, Clone, Copy)]
pub struct ConstantSampler {
    pub n: usize,
    pub value: f64,
}

impl SequenceSampler for ConstantSampler {
    fn sample(&self, _rng: &mut dyn RngCore) -> Result<Vec<f64>, EvalError> {
        Ok(vec![self.value; self.n])
    }
}

fn check_trials(trials: u64) -> Result<(), EvalError> {
    if trials == 0 {
        return Err(EvalError::NoTrials);
    }
    Ok(())
}

fn trial_error(index: u64, e: impl std::fmt::Display) -> EvalError {
    EvalError::Trial {
        index,
        message: e.to_string(),
    }
}

/// Squared error of the forecaster on sampled sequences, read value by value.
pub fn monte_carlo_error(
    forecaster: &dyn BlockForecaster,
    sampler: &dyn SequenceSampler,
    trials: u64,
    master_seed: u64,
) -> Result<ErrorEstimate, EvalError> {
    monte_carlo_error_on(thread_count(), forecaster, sampler, trials, master_seed)
}

pub(crate) fn monte_carlo_error_on(
    threads: usize,
    forecaster: &dyn BlockForecaster,
    sampler: &dyn SequenceSampler,
    trials: u64,
    master_seed: u64,
) -> Result<ErrorEstimate, EvalError> {
    check_trials(trials)?;
    let errors = parallel_map_on(threads, trials, |i| {
        let mut rng = trial_rng(master_seed, i);
        let x = sampler.sample(&mut rng).map_err(|e| trial_error(i, e))?;
        let (_, _, err) = play(forecaster, &x, &mut rng).map_err(|e| trial_error(i, e))?;
        Ok(err)
    })?;
    Ok(ErrorEstimate::from_samples(&errors))
}

/// Blocks grouped by length, each group's positions sorted.
struct LengthClasses {
    classes: Vec<(u64, Vec<usize>)>,
}

impl LengthClasses {
    fn new(b: &BlockRepresentation) -> Option<Self> {
        let mut by_len: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (r, &l) in b.lengths().iter().enumerate() {
            by_len.entry(l).or_default().push(r);
            if by_len.len() > MAX_LENGTH_CLASSES {
                return None;
            }
        }
        Some(Self {
            classes: by_len.into_iter().collect(),
        })
    }

    /// Mean of independent fair bits over `range`, weighted by length.
    fn sample_mean(
        &self,
        b: &BlockRepresentation,
        range: Range<usize>,
        rng: &mut dyn RngCore,
    ) -> f64 {
        let mut ones: u128 = 0;
        for (l, pos) in &self.classes {
            let lo = pos.partition_point(|&r| r < range.start);
            let hi = pos.partition_point(|&r| r < range.end);
            let count = (hi - lo) as u64;
            if count > 0 {
                let k = Binomial::new(count, 0.5).expect("valid binomial").sample(rng);
                ones += u128::from(*l) * u128::from(k);
            }
        }
        ones as f64 / b.range_total(range) as f64
    }
}

fn binomial_deviation(
    b: &BlockRepresentation,
    classes: &LengthClasses,
    forecast: &BlockForecast,
    rng: &mut dyn RngCore,
) -> f64 {
    let mu_hat = match &forecast.source {
        Estimator::Blocks(r) => classes.sample_mean(b, r.clone(), rng),
        Estimator::Constant(v) => *v,
    };
    mu_hat - classes.sample_mean(b, forecast.target.clone(), rng)
}

/// Squared error on block-constant sequences, computed from block means
/// without materializing the sequence. Handles instances far longer than
/// memory. Under the Bernoulli adversary, blocks of equal length inside the
/// source or target share one binomial draw.
pub fn block_monte_carlo_error(
    forecaster: &dyn BlockForecaster,
    adversary: &Adversary,
    trials: u64,
    master_seed: u64,
) -> Result<ErrorEstimate, EvalError> {
    block_monte_carlo_error_on(thread_count(), forecaster, adversary, trials, master_seed)
}

pub(crate) fn block_monte_carlo_error_on(
    threads: usize,
    forecaster: &dyn BlockForecaster,
    adversary: &Adversary,
    trials: u64,
    master_seed: u64,
) -> Result<ErrorEstimate, EvalError> {
    check_trials(trials)?;
    let b = forecaster.instance();
    if let Adversary::Bernoulli { m } = adversary {
        if *m != b.m() {
            return Err(crate::adversary::AdversaryError::Dimension { model: *m, got: b.m() }.into());
        }
    }
    let classes = match adversary {
        Adversary::Bernoulli { .. } => LengthClasses::new(b),
        Adversary::Tree(_) => None,
    };
    let errors = parallel_map_on(threads, trials, |i| {
        let mut rng = trial_rng(master_seed, i);
        let forecast = forecaster.decide(&mut rng);
        let dev = match &classes {
            Some(c) => binomial_deviation(b, c, &forecast, &mut rng),
            None => {
                let means = adversary.sample_block_means(&mut rng);
                if means.len() != b.m() {
                    return Err(trial_error(i, "adversary does not match the instance"));
                }
                forecast.deviation(b, &means)
            }
        };
        Ok(dev * dev)
    })?;
    Ok(ErrorEstimate::from_samples(&errors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::AdversaryKind;
    use crate::eval::exact_expected_error;
    use crate::forecaster::{Algorithm, UniformForecaster};
    use crate::instance::Family;
    use rand::Rng;

    fn inst(ls: &[u64]) -> BlockRepresentation {
        BlockRepresentation::from_lengths(ls.to_vec()).unwrap()
    }

    fn within(est: &ErrorEstimate, exact: f64, sigmas: f64) -> bool {
        (est.mean - exact).abs() <= sigmas * est.std_error + 1e-12
    }

    #[test]
    fn seeds_differ_by_index_and_master() {
        assert_ne!(trial_seed(1, 0), trial_seed(1, 1));
        assert_ne!(trial_seed(1, 0), trial_seed(2, 0));
        assert_eq!(trial_seed(5, 9), trial_seed(5, 9));
    }

    #[test]
    fn constant_sequences_cost_nothing() {
        let f = UniformForecaster::new(inst(&[1, 2, 3, 1])).unwrap();
        let e = monte_carlo_error(&f, &ConstantSampler { n: 7, value: 0.3 }, 500, 1).unwrap();
        assert_eq!(e.mean, 0.0);
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.trials, 500);
    }

    #[test]
    fn forced_pair_matches_exact_value() {
        let b = inst(&[1, 1]);
        let f = UniformForecaster::new(b.clone()).unwrap();
        let s = AdversarySampler::new(b, AdversaryKind::Bernoulli).unwrap();
        let e = monte_carlo_error(&f, &s, 100_000, 3).unwrap();
        assert!(within(&e, 0.5, 3.0), "{e:?}");
    }

    #[test]
    fn thread_count_does_not_change_estimates() {
        let b = Family::Geometric { m: 6 }.build().unwrap();
        let f = Algorithm::General.build(&b).unwrap();
        let s = AdversarySampler::new(b.clone(), AdversaryKind::Tree).unwrap();
        let one = monte_carlo_error_on(1, f.as_ref(), &s, 3000, 42).unwrap();
        let four = monte_carlo_error_on(4, f.as_ref(), &s, 3000, 42).unwrap();
        assert_eq!(one.mean.to_bits(), four.mean.to_bits());
        assert_eq!(one.std_error.to_bits(), four.std_error.to_bits());
        let adv = Adversary::new(AdversaryKind::Bernoulli, &b).unwrap();
        let one = block_monte_carlo_error_on(1, f.as_ref(), &adv, 3000, 42).unwrap();
        let four = block_monte_carlo_error_on(3, f.as_ref(), &adv, 3000, 42).unwrap();
        assert_eq!(one, four);
    }

    struct Flaky;

    impl SequenceSampler for Flaky {
        fn sample(&self, rng: &mut dyn RngCore) -> Result<Vec<f64>, EvalError> {
            if rng.random_bool(0.01) {
                Err(EvalError::Domain("flaky".into()))
            } else {
                Ok(vec![0.5; 2])
            }
        }
    }

    #[test]
    fn failures_report_the_first_index() {
        let f = UniformForecaster::new(inst(&[1, 1])).unwrap();
        let a = monte_carlo_error_on(1, &f, &Flaky, 2000, 8).unwrap_err();
        let b = monte_carlo_error_on(4, &f, &Flaky, 2000, 8).unwrap_err();
        assert_eq!(a, b);
        assert!(matches!(a, EvalError::Trial { .. }));
        assert_eq!(monte_carlo_error(&f, &Flaky, 0, 8), Err(EvalError::NoTrials));
    }

    #[test]
    fn block_paths_agree_with_exact_values() {
        for ls in [vec![1u64; 4], vec![1, 5, 1, 2], vec![3, 1, 4, 1, 5, 9, 2, 6]] {
            let b = inst(&ls);
            let f = UniformForecaster::new(b.clone()).unwrap();
            let law = f.law().unwrap();
            for kind in [AdversaryKind::Bernoulli, AdversaryKind::Tree] {
                let adv = Adversary::new(kind, &b).unwrap();
                let exact = exact_expected_error(&b, &law, &adv.model()).unwrap();
                let mc = block_monte_carlo_error(&f, &adv, 100_000, 17).unwrap();
                assert!(within(&mc, exact.mean, 3.5), "{ls:?} {kind}: {mc:?} vs {}", exact.mean);
            }
        }
    }

    #[test]
    fn element_and_block_paths_share_a_mean() {
        let b = inst(&[2, 1, 3, 1, 2]);
        let f = UniformForecaster::new(b.clone()).unwrap();
        let s = AdversarySampler::new(b.clone(), AdversaryKind::Bernoulli).unwrap();
        let adv = Adversary::new(AdversaryKind::Bernoulli, &b).unwrap();
        let x = monte_carlo_error(&f, &s, 50_000, 5).unwrap();
        let y = block_monte_carlo_error(&f, &adv, 50_000, 6).unwrap();
        let sigma = (x.std_error.powi(2) + y.std_error.powi(2)).sqrt();
        assert!((x.mean - y.mean).abs() <= 4.0 * sigma);
    }

    #[test]
    fn huge_instances_run_at_block_level() {
        let b = Family::Separation { k: 8, h: 16 }.build().unwrap();
        let f = Algorithm::Separation.build(&b).unwrap();
        let adv = Adversary::new(AdversaryKind::Bernoulli, &b).unwrap();
        let e = block_monte_carlo_error(f.as_ref(), &adv, 200, 1).unwrap();
        assert!(e.mean >= 0.0 && e.mean <= 1.0);
    }
}
