//! Forecasters for PLS instances.
//!
//! Every forecaster here is block-linear: it first commits, using only its
//! own randomness, to a [`BlockForecast`] (a source range of blocks, or a
//! constant, and a target range), and then reads the stream up to the
//! prediction time. Splitting the decision from the reading is what allows
//! exact evaluation: the law of the decision is enumerable, and each
//! decision's error is a linear form in the block means.

mod select;
mod separation;
mod stream;

pub use select::{
    random_select, random_select_distribution, OutcomeDistribution, SelectOutcome,
    WeightedOutcome, ENUMERATION_MAX_K, EXACT_PROBABILITY_MAX_K,
};
pub use separation::SeparationForecaster;
pub use stream::{
    outcome_to_coefficients, BlockForecast, Estimator, Prediction, SequenceReader, SliceReader,
};

use std::fmt;
use std::str::FromStr;

use num::{BigRational, One};
use rand::RngCore;
use thiserror::Error;

use crate::instance::{greedy_merge, BlockRepresentation, InstanceError, MergePlan};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForecastError {
    #[error("selection needs s >= 1, k >= 1 and s + 2^k - 1 <= m (got s={s}, k={k}, m={m})")]
    SelectBounds { s: usize, k: u32, m: usize },
    #[error("exact enumeration is limited to k <= {limit}, got {k}")]
    EnumerationLimit { k: u32, limit: u32 },
    #[error("the uniform-block forecaster needs at least 2 blocks, got {0}")]
    TooFewBlocks(usize),
    #[error("sequence ended after {read} values; {needed} are required")]
    StreamExhausted { read: u128, needed: u128 },
    #[error("sequence value {value} at position {position} is outside [0, 1]")]
    ValueOutOfRange { position: u128, value: f64 },
    #[error("sequence has {got} values but the instance has length {expected}")]
    StreamLength { got: u128, expected: u128 },
    #[error("instance is not a member of the separation family")]
    NotSeparation,
    #[error("unknown algorithm `{0}` (expected uniform, general or separation)")]
    UnknownAlgorithm(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// One decision of a forecaster's law.
#[derive(Debug, Clone, PartialEq)]
pub struct LawEntry {
    pub forecast: BlockForecast,
    pub probability: f64,
    pub exact: Option<BigRational>,
}

/// Complete law of a forecaster's decision.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ForecastLaw {
    pub entries: Vec<LawEntry>,
}

impl ForecastLaw {
    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }

    pub fn is_exact(&self) -> bool {
        self.entries.iter().all(|e| e.exact.is_some())
    }

    fn single(forecast: BlockForecast) -> Self {
        Self {
            entries: vec![LawEntry {
                forecast,
                probability: 1.0,
                exact: Some(BigRational::one()),
            }],
        }
    }
}

/// A forecaster that commits to a [`BlockForecast`] before reading.
pub trait BlockForecaster: Send + Sync {
    fn name(&self) -> &'static str;

    fn instance(&self) -> &BlockRepresentation;

    fn decide(&self, rng: &mut dyn RngCore) -> BlockForecast;

    fn law(&self) -> Result<ForecastLaw, ForecastError>;

    fn forecast(
        &self,
        reader: &mut dyn SequenceReader,
        rng: &mut dyn RngCore,
    ) -> Result<Prediction, ForecastError> {
        self.decide(rng).execute(self.instance(), reader)
    }
}

/// `floor(log2 m)` for `m >= 1`.
pub fn floor_log2(m: usize) -> u32 {
    usize::BITS - 1 - m.leading_zeros()
}

/// Predicts from the first `2^floor(log2 m)` blocks via [`random_select`].
#[derive(Debug, Clone)]
pub struct UniformForecaster {
    blocks: BlockRepresentation,
    k: u32,
}

impl UniformForecaster {
    pub fn new(blocks: BlockRepresentation) -> Result<Self, ForecastError> {
        if blocks.m() < 2 {
            return Err(ForecastError::TooFewBlocks(blocks.m()));
        }
        let k = floor_log2(blocks.m());
        Ok(Self { blocks, k })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn outcome_law(&self) -> Result<OutcomeDistribution, ForecastError> {
        random_select_distribution(&self.blocks, 1, self.k)
    }
}

impl BlockForecaster for UniformForecaster {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn instance(&self) -> &BlockRepresentation {
        &self.blocks
    }

    fn decide(&self, rng: &mut dyn RngCore) -> BlockForecast {
        let outcome = random_select(&self.blocks, 1, self.k, rng).expect("k fits the instance");
        BlockForecast::from_outcome(outcome)
    }

    fn law(&self) -> Result<ForecastLaw, ForecastError> {
        let entries = self
            .outcome_law()?
            .outcomes()
            .iter()
            .map(|o| LawEntry {
                forecast: BlockForecast::from_outcome(o.outcome),
                probability: o.probability,
                exact: o.exact.clone(),
            })
            .collect();
        Ok(ForecastLaw { entries })
    }
}

/// Merges with factor 2, then runs the uniform forecaster on the merge. When
/// the merge has a single block, predicts 1/2 for the whole sequence at the
/// first stopping time.
#[derive(Debug, Clone)]
pub struct GeneralForecaster {
    blocks: BlockRepresentation,
    plan: MergePlan,
    inner: Option<UniformForecaster>,
}

impl GeneralForecaster {
    pub const MERGE_FACTOR: f64 = 2.0;
    pub const FALLBACK: f64 = 0.5;

    pub fn new(blocks: BlockRepresentation) -> Result<Self, ForecastError> {
        let plan = greedy_merge(&blocks, Self::MERGE_FACTOR)?;
        let inner = if plan.len() >= 2 {
            Some(UniformForecaster::new(plan.to_instance(&blocks))?)
        } else {
            None
        };
        Ok(Self {
            blocks,
            plan,
            inner,
        })
    }

    pub fn plan(&self) -> &MergePlan {
        &self.plan
    }

    fn lift(&self, merged: BlockForecast) -> BlockForecast {
        let cuts = self.plan.cuts();
        let map = |r: std::ops::Range<usize>| cuts[r.start] - 1..cuts[r.end] - 1;
        BlockForecast {
            source: match merged.source {
                Estimator::Blocks(r) => Estimator::Blocks(map(r)),
                c @ Estimator::Constant(_) => c,
            },
            target: map(merged.target),
        }
    }

    fn fallback(&self) -> BlockForecast {
        BlockForecast {
            source: Estimator::Constant(Self::FALLBACK),
            target: 0..self.blocks.m(),
        }
    }
}

impl BlockForecaster for GeneralForecaster {
    fn name(&self) -> &'static str {
        "general"
    }

    fn instance(&self) -> &BlockRepresentation {
        &self.blocks
    }

    fn decide(&self, rng: &mut dyn RngCore) -> BlockForecast {
        match &self.inner {
            Some(inner) => self.lift(inner.decide(rng)),
            None => self.fallback(),
        }
    }

    fn law(&self) -> Result<ForecastLaw, ForecastError> {
        match &self.inner {
            Some(inner) => {
                let mut law = inner.law()?;
                for e in &mut law.entries {
                    e.forecast = self.lift(e.forecast.clone());
                }
                Ok(law)
            }
            None => Ok(ForecastLaw::single(self.fallback())),
        }
    }
}

/// The three forecasting algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Uniform,
    General,
    Separation,
}

impl Algorithm {
    pub fn build(
        self,
        blocks: &BlockRepresentation,
    ) -> Result<Box<dyn BlockForecaster>, ForecastError> {
        Ok(match self {
            Algorithm::Uniform => Box::new(UniformForecaster::new(blocks.clone())?),
            Algorithm::General => Box::new(GeneralForecaster::new(blocks.clone())?),
            Algorithm::Separation => Box::new(SeparationForecaster::new(blocks.clone())?),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Uniform => "uniform",
            Algorithm::General => "general",
            Algorithm::Separation => "separation",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = ForecastError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Algorithm::Uniform),
            "general" => Ok(Algorithm::General),
            "separation" => Ok(Algorithm::Separation),
            other => Err(ForecastError::UnknownAlgorithm(other.to_string())),
        }
    }
}

fn run(
    forecaster: &dyn BlockForecaster,
    reader: &mut dyn SequenceReader,
    rng: &mut dyn RngCore,
) -> Result<Prediction, ForecastError> {
    forecaster.forecast(reader, rng)
}

/// Uniform-block forecaster on `b`, reading from `reader`.
pub fn uniform_forecast(
    b: &BlockRepresentation,
    reader: &mut dyn SequenceReader,
    rng: &mut dyn RngCore,
) -> Result<Prediction, ForecastError> {
    run(&UniformForecaster::new(b.clone())?, reader, rng)
}

/// Merge-based forecaster on `b`, reading from `reader`.
pub fn general_forecast(
    b: &BlockRepresentation,
    reader: &mut dyn SequenceReader,
    rng: &mut dyn RngCore,
) -> Result<Prediction, ForecastError> {
    run(&GeneralForecaster::new(b.clone())?, reader, rng)
}

/// Recursive forecaster for separation instances.
pub fn separation_forecast(
    b: &BlockRepresentation,
    reader: &mut dyn SequenceReader,
    rng: &mut dyn RngCore,
) -> Result<Prediction, ForecastError> {
    run(&SeparationForecaster::new(b.clone())?, reader, rng)
}

/// Runs `forecaster` on a complete sequence and scores the prediction.
/// Returns `(prediction, mu, squared_error)`.
pub fn play(
    forecaster: &dyn BlockForecaster,
    x: &[f64],
    rng: &mut dyn RngCore,
) -> Result<(Prediction, f64, f64), ForecastError> {
    let n = forecaster.instance().n();
    if x.len() as u128 != n {
        return Err(ForecastError::StreamLength {
            got: x.len() as u128,
            expected: n,
        });
    }
    if let Some(pos) = x.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(ForecastError::ValueOutOfRange {
            position: pos as u128 + 1,
            value: x[pos],
        });
    }
    let p = forecaster.forecast(&mut SliceReader::new(x), rng)?;
    let (mu, err) = p.score(x)?;
    Ok((p, mu, err))
}
