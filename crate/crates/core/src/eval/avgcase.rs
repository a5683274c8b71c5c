//! Average-case experiment over random stopping time sets.

use super::montecarlo::{parallel_map, trial_rng};
use super::{ErrorEstimate, EvalError};
use crate::instance::approximate_uniformity;
use crate::randgen::{sample_stopping_set, ProbabilitySequence, StoppingDraw};

/// Frequency of `|T| <= 2np` and `m' >= n / ceil(2 ln n / p) - 1` for a
/// constant inclusion probability `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointEvent {
    pub p: f64,
    pub size_threshold: f64,
    pub uniformity_threshold: f64,
    pub occurrences: u64,
    pub frequency: f64,
    /// Trials meeting the size threshold alone.
    pub size_occurrences: u64,
    /// Trials meeting the uniformity threshold alone.
    pub uniformity_occurrences: u64,
    /// `1 - exp(-np/3) - 1/n`.
    pub bound: f64,
    /// Binomial standard deviation of the frequency at the bound.
    pub sigma: f64,
}

impl JointEvent {
    pub fn holds(&self, sigmas: f64) -> bool {
        self.frequency >= self.bound - sigmas * self.sigma
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AverageCaseReport {
    pub n: usize,
    pub trials: u64,
    /// Trials that drew no stopping time; excluded from the means below.
    pub empty_draws: u64,
    /// `m0 = sum p_t`.
    pub expected_size: f64,
    /// Monotone runs of the inclusion probabilities.
    pub runs: usize,
    pub mean_size: f64,
    pub mean_uniformity: f64,
    /// `m' k ln^2 n / m0`, averaged.
    pub uniformity_ratio: ErrorEstimate,
    /// `|T| / m0`, averaged.
    pub size_ratio: ErrorEstimate,
    /// Present when the probabilities are constant.
    pub joint: Option<JointEvent>,
}

struct Draw {
    size: usize,
    uniformity: f64,
}

pub fn average_case_experiment(
    p: &ProbabilitySequence,
    trials: u64,
    master_seed: u64,
) -> Result<AverageCaseReport, EvalError> {
    if trials == 0 {
        return Err(EvalError::NoTrials);
    }
    let m0 = p.expected_size();
    if m0 <= 0.0 {
        return Err(crate::randgen::RandgenError::AllZero.into());
    }
    let draws = parallel_map(trials, |i| {
        let mut rng = trial_rng(master_seed, i);
        Ok(match sample_stopping_set(p, &mut rng) {
            StoppingDraw::Empty => None,
            StoppingDraw::Set(ts) => Some(Draw {
                size: ts.len(),
                uniformity: approximate_uniformity(&ts.to_blocks()).to_f64(),
            }),
        })
    })?;

    let n = p.len();
    let nf = n as f64;
    let ln_n = nf.ln();
    let k = p.run_count() as f64;
    let kept: Vec<&Draw> = draws.iter().flatten().collect();
    let empty = trials - kept.len() as u64;
    let count = kept.len().max(1) as f64;
    let size = kept.iter().map(|d| d.size as f64).sum::<f64>();
    let unif = kept.iter().map(|d| d.uniformity).sum::<f64>();
    let unif_ratio: Vec<f64> = kept
        .iter()
        .map(|d| d.uniformity * k * ln_n * ln_n / m0)
        .collect();
    let size_ratio: Vec<f64> = kept.iter().map(|d| d.size as f64 / m0).collect();
    let estimate = |v: &[f64]| {
        if v.is_empty() {
            ErrorEstimate::from_samples(&[f64::NAN])
        } else {
            ErrorEstimate::from_samples(v)
        }
    };

    let first = p.values()[0];
    let joint = p.values().iter().all(|&v| v == first).then(|| {
        let size_threshold = 2.0 * nf * first;
        let uniformity_threshold = nf / (2.0 * ln_n / first).ceil() - 1.0;
        let small = |d: &Draw| d.size as f64 <= size_threshold;
        let uniform = |d: &Draw| d.uniformity >= uniformity_threshold;
        let occurrences = kept.iter().filter(|d| small(d) && uniform(d)).count() as u64;
        let size_occurrences = kept.iter().filter(|d| small(d)).count() as u64;
        let uniformity_occurrences = kept.iter().filter(|d| uniform(d)).count() as u64;
        let bound = 1.0 - (-nf * first / 3.0).exp() - 1.0 / nf;
        let q = bound.clamp(0.0, 1.0);
        JointEvent {
            p: first,
            size_threshold,
            uniformity_threshold,
            occurrences,
            size_occurrences,
            uniformity_occurrences,
            frequency: occurrences as f64 / trials as f64,
            bound,
            sigma: (q * (1.0 - q) / trials as f64).sqrt(),
        }
    });

    Ok(AverageCaseReport {
        n,
        trials,
        empty_draws: empty,
        expected_size: m0,
        runs: p.run_count(),
        mean_size: size / count,
        mean_uniformity: unif / count,
        uniformity_ratio: estimate(&unif_ratio),
        size_ratio: estimate(&size_ratio),
        joint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certain_inclusion_gives_the_full_set() {
        let p = ProbabilitySequence::constant(64, 1.0).unwrap();
        let r = average_case_experiment(&p, 20, 1).unwrap();
        assert_eq!(r.empty_draws, 0);
        assert_eq!(r.mean_size, 64.0);
        assert_eq!(r.mean_uniformity, 64.0);
        assert_eq!(r.size_ratio.mean, 1.0);
        assert_eq!(r.size_ratio.std_error, 0.0);
        let j = r.joint.unwrap();
        assert_eq!(j.occurrences, 20);
        assert_eq!(j.size_occurrences, 20);
    }

    #[test]
    fn empty_draws_are_counted_apart() {
        let mut v = vec![0.0; 50];
        v[7] = 0.5;
        let p = ProbabilitySequence::new(v).unwrap();
        let r = average_case_experiment(&p, 400, 9).unwrap();
        assert!(r.empty_draws > 100 && r.empty_draws < 300);
        assert_eq!(r.mean_size, 1.0);
        assert!(r.joint.is_none());
    }

    #[test]
    fn joint_event_at_moderate_scale() {
        let p = ProbabilitySequence::constant(512, 0.2).unwrap();
        let r = average_case_experiment(&p, 200, 4).unwrap();
        let j = r.joint.clone().unwrap();
        assert!(j.holds(4.0), "{j:?}");
        assert_eq!(r, average_case_experiment(&p, 200, 4).unwrap());
    }

    #[test]
    fn zero_trials_rejected() {
        let p = ProbabilitySequence::constant(4, 0.5).unwrap();
        assert_eq!(average_case_experiment(&p, 0, 1), Err(EvalError::NoTrials));
    }
}
