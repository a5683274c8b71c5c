//! Error evaluation, exact and by simulation, and numerical checks of the
//! upper and lower bounds.

mod avgcase;
mod bounds;
mod exact;
mod montecarlo;
mod overlap;
mod treevar;

pub use avgcase::{average_case_experiment, AverageCaseReport};
pub use bounds::{analytic_upper_bound, mixing_identity_residual, phi, separation_bound};
pub use exact::{bernoulli_exact_error, exact_expected_error, law_coefficients};
pub use montecarlo::{
    block_monte_carlo_error, monte_carlo_error, parallel_map, thread_count, trial_rng,
    trial_seed, AdversarySampler, ConstantSampler, SequenceSampler, THREADS_ENV,
};
pub use overlap::{
    check_block_overlap, for_each_window, min_conditional_variance_bruteforce,
    min_max_share_bruteforce, variance_lower_bound_report, window_overlap_profile,
    OverlapProfile,
};
pub use treevar::{min_window_variance, WindowVariance};

use std::fmt;

use num::BigRational;
use thiserror::Error;

use crate::adversary::AdversaryError;
use crate::forecaster::ForecastError;
use crate::instance::{BlockRepresentation, InstanceError};
use crate::randgen::RandgenError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("timestep {0} is not a stopping time")]
    NotStoppingTime(u128),
    #[error("window (t={t}, w={w}) does not fit the instance")]
    WindowOutOfRange { t: u128, w: u128 },
    #[error("at least one trial is required")]
    NoTrials,
    #[error("trial {index} failed: {message}")]
    Trial { index: u64, message: String },
    #[error("{0} is outside the function's domain")]
    Domain(String),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Randgen(#[from] RandgenError),
    #[error("could not build the thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Exact,
    MonteCarlo,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::MonteCarlo => "mc",
        })
    }
}

/// Expected squared error, exact or estimated.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub mode: Mode,
    /// Exact rational value, when the inputs allowed one.
    pub exact: Option<BigRational>,
}

impl ErrorEstimate {
    pub fn exact(mean: f64, exact: Option<BigRational>) -> Self {
        Self {
            mean,
            std_error: 0.0,
            trials: 0,
            mode: Mode::Exact,
            exact,
        }
    }

    /// Mean and standard error of per-trial errors, summed in index order.
    pub fn from_samples(errors: &[f64]) -> Self {
        let n = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / n;
        let var = if errors.len() > 1 {
            errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / n).sqrt(),
            trials: errors.len() as u64,
            mode: Mode::MonteCarlo,
            exact: None,
        }
    }
}

/// Outcome of one bound check.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub bound_name: String,
    pub instance: String,
    pub measured: f64,
    pub bound: f64,
    pub satisfied: bool,
    pub measured_exact: Option<BigRational>,
    pub bound_exact: Option<BigRational>,
    /// `(t, w)` attaining the measured extreme, where applicable.
    pub witness: Option<(u128, u128)>,
}

impl BoundReport {
    /// `lower` means the measured value must be at least the bound.
    pub(crate) fn exact(
        name: &str,
        b: &BlockRepresentation,
        measured: BigRational,
        bound: BigRational,
        witness: Option<(u128, u128)>,
        lower: bool,
    ) -> Self {
        let satisfied = if lower {
            measured >= bound
        } else {
            measured <= bound
        };
        Self {
            bound_name: name.to_string(),
            instance: b.describe(),
            measured: overlap::to_f64(&measured),
            bound: overlap::to_f64(&bound),
            satisfied,
            measured_exact: Some(measured),
            bound_exact: Some(bound),
            witness,
        }
    }

    pub fn approximate(name: &str, instance: String, measured: f64, bound: f64, lower: bool) -> Self {
        let satisfied = if lower {
            measured >= bound
        } else {
            measured <= bound
        };
        Self {
            bound_name: name.to_string(),
            instance,
            measured,
            bound,
            satisfied,
            measured_exact: None,
            bound_exact: None,
            witness: None,
        }
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} on {}: measured {:.6} vs bound {:.6} ({})",
            self.bound_name,
            self.instance,
            self.measured,
            self.bound,
            if self.satisfied { "ok" } else { "violated" }
        )
    }
}
