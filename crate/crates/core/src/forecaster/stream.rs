//! Block-linear forecasts and their execution against a sequence stream.

use std::ops::Range;

use num::{BigInt, BigRational, Zero};

use super::{ForecastError, SelectOutcome};
use crate::instance::BlockRepresentation;

/// Source of the sequence values `x_1, x_2, ...`, consumed strictly in order.
pub trait SequenceReader {
    /// Next value, or `None` once the stream is exhausted.
    fn next_value(&mut self) -> Option<f64>;
}

/// Reader over an in-memory sequence.
#[derive(Debug, Clone)]
pub struct SliceReader<'a> {
    values: &'a [f64],
    pos: usize,
}

impl<'a> SliceReader<'a> {
    pub fn new(values: &'a [f64]) -> Self {
        Self { values, pos: 0 }
    }

    /// Number of values handed out so far.
    pub fn consumed(&self) -> usize {
        self.pos
    }
}

impl SequenceReader for SliceReader<'_> {
    fn next_value(&mut self) -> Option<f64> {
        let v = self.values.get(self.pos).copied()?;
        self.pos += 1;
        Some(v)
    }
}

/// How the forecaster estimates the target mean.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    /// Mean of the values in these (0-based) blocks.
    Blocks(Range<usize>),
    /// A fixed guess that reads nothing.
    Constant(f64),
}

/// A prediction whose form is fixed before any value is read: at the start
/// of block `target.start`, predict the mean of the `target` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockForecast {
    pub source: Estimator,
    pub target: Range<usize>,
}

/// A forecaster's answer: window `(t, t + w]` and its predicted mean. `t` is
/// an absolute timestep, i.e. it includes the instance origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub t: u128,
    pub w: u128,
    pub mu_hat: f64,
}

impl Prediction {
    /// Actual window mean and squared error on a full sequence.
    pub fn score(&self, x: &[f64]) -> Result<(f64, f64), ForecastError> {
        let end = self.t + self.w;
        if (x.len() as u128) < end {
            return Err(ForecastError::StreamExhausted {
                read: x.len() as u128,
                needed: end,
            });
        }
        let mu = mean_of(x[self.t as usize..end as usize].iter().copied());
        Ok((mu, (self.mu_hat - mu).powi(2)))
    }
}

/// Mean that is exact on constant input and compensated otherwise.
pub(crate) fn mean_of(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = MeanAccumulator::default();
    for v in values {
        acc.push(v);
    }
    acc.mean()
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct MeanAccumulator {
    count: u128,
    sum: f64,
    carry: f64,
    first: Option<f64>,
    constant: bool,
}

impl MeanAccumulator {
    pub(crate) fn push(&mut self, v: f64) {
        match self.first {
            None => {
                self.first = Some(v);
                self.constant = true;
            }
            Some(f) => self.constant &= f == v,
        }
        // Neumaier summation
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
        self.count += 1;
    }

    pub(crate) fn mean(&self) -> f64 {
        match self.first {
            None => f64::NAN,
            Some(f) if self.constant => f,
            Some(_) => ((self.sum + self.carry) / self.count as f64).clamp(0.0, 1.0),
        }
    }
}

impl BlockForecast {
    pub fn from_outcome(outcome: SelectOutcome) -> Self {
        Self {
            source: Estimator::Blocks(outcome.source()),
            target: outcome.target(),
        }
    }

    /// Absolute prediction time.
    pub fn time(&self, b: &BlockRepresentation) -> u128 {
        b.origin() + b.block_start(self.target.start)
    }

    /// Window length.
    pub fn window(&self, b: &BlockRepresentation) -> u128 {
        b.range_total(self.target.clone())
    }

    /// Reads exactly `t` values from `reader` and forms the prediction.
    pub fn execute(
        &self,
        b: &BlockRepresentation,
        reader: &mut dyn SequenceReader,
    ) -> Result<Prediction, ForecastError> {
        let t = self.time(b);
        let (lo, hi) = match &self.source {
            Estimator::Blocks(r) => (
                b.origin() + b.block_start(r.start),
                b.origin() + b.block_start(r.end),
            ),
            Estimator::Constant(_) => (0, 0),
        };
        let mut acc = MeanAccumulator::default();
        for pos in 1..=t {
            let x = reader.next_value().ok_or(ForecastError::StreamExhausted {
                read: pos - 1,
                needed: t,
            })?;
            if !(0.0..=1.0).contains(&x) {
                return Err(ForecastError::ValueOutOfRange {
                    position: pos,
                    value: x,
                });
            }
            if pos > lo && pos <= hi {
                acc.push(x);
            }
        }
        let mu_hat = match self.source {
            Estimator::Blocks(_) => acc.mean(),
            Estimator::Constant(c) => c,
        };
        Ok(Prediction {
            t,
            w: self.window(b),
            mu_hat,
        })
    }

    /// `(c0, c)` with `mu_hat - mu = c0 + sum_r c_r mu_r` whenever block `r`
    /// is constant at `mu_r`.
    pub fn coefficients(&self, b: &BlockRepresentation) -> (BigRational, Vec<BigRational>) {
        let mut c = vec![BigRational::zero(); b.m()];
        let constant = match &self.source {
            Estimator::Blocks(r) => {
                let w0 = BigInt::from(b.range_total(r.clone()));
                for idx in r.clone() {
                    c[idx] += BigRational::new(BigInt::from(b.lengths()[idx]), w0.clone());
                }
                BigRational::zero()
            }
            Estimator::Constant(v) => BigRational::from_float(*v).expect("finite constant"),
        };
        let w = BigInt::from(self.window(b));
        for idx in self.target.clone() {
            c[idx] -= BigRational::new(BigInt::from(b.lengths()[idx]), w.clone());
        }
        (constant, c)
    }

    /// `mu_hat - mu` for a block-constant sequence with the given block means.
    pub fn deviation(&self, b: &BlockRepresentation, block_means: &[f64]) -> f64 {
        let weighted = |r: Range<usize>| {
            let total = b.range_total(r.clone()) as f64;
            r.map(|idx| b.lengths()[idx] as f64 * block_means[idx])
                .sum::<f64>()
                / total
        };
        let mu_hat = match &self.source {
            Estimator::Blocks(r) => weighted(r.clone()),
            Estimator::Constant(v) => *v,
        };
        mu_hat - weighted(self.target.clone())
    }
}

/// Dense coefficient vector of a selection outcome (see
/// [`BlockForecast::coefficients`]).
pub fn outcome_to_coefficients(b: &BlockRepresentation, outcome: SelectOutcome) -> Vec<BigRational> {
    BlockForecast::from_outcome(outcome).coefficients(b).1
}
