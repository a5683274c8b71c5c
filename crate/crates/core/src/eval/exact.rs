//! Exact expected error of block-linear forecasters against moment models.

use num::{BigInt, BigRational, ToPrimitive, Zero};

use super::{ErrorEstimate, EvalError};
use crate::adversary::{AdversaryError, BlockMeanModel, Structure};
use crate::forecaster::{BlockForecast, Estimator, ForecastLaw};
use crate::instance::BlockRepresentation;

/// `(c0, c)` in floating point for one decision.
pub fn law_coefficients(b: &BlockRepresentation, forecast: &BlockForecast) -> (f64, Vec<f64>) {
    let mut c = vec![0.0; b.m()];
    let c0 = match &forecast.source {
        Estimator::Blocks(r) => {
            let w0 = b.range_total(r.clone()) as f64;
            for idx in r.clone() {
                c[idx] += b.lengths()[idx] as f64 / w0;
            }
            0.0
        }
        Estimator::Constant(v) => *v,
    };
    let w = b.range_total(forecast.target.clone()) as f64;
    for idx in forecast.target.clone() {
        c[idx] -= b.lengths()[idx] as f64 / w;
    }
    (c0, c)
}

fn sum_of_squares(b: &BlockRepresentation, r: std::ops::Range<usize>) -> BigInt {
    b.lengths()[r]
        .iter()
        .map(|&l| BigInt::from(l) * BigInt::from(l))
        .sum()
}

/// Exact `E[(mu_hat - mu)^2]` of one decision against independent fair bits:
/// `(c0 + sum c / 2)^2 + (sum c^2) / 4`, with the sums read off the ranges.
pub fn bernoulli_exact_error(b: &BlockRepresentation, forecast: &BlockForecast) -> BigRational {
    let quarter = BigRational::new(1.into(), 4.into());
    let half = BigRational::new(1.into(), 2.into());
    let ratio = |r: std::ops::Range<usize>| {
        let w = BigInt::from(b.range_total(r.clone()));
        BigRational::new(sum_of_squares(b, r), &w * &w)
    };
    let target = ratio(forecast.target.clone());
    let (mean, squares) = match &forecast.source {
        // coefficients sum to zero
        Estimator::Blocks(r) => (BigRational::zero(), ratio(r.clone()) + target),
        Estimator::Constant(v) => (
            BigRational::from_float(*v).expect("finite") - half,
            target,
        ),
    };
    &mean * &mean + squares * quarter
}

/// `sum_decision P(decision) E[(c0 + c . mu)^2]`. The exact rational value is
/// attached when the law is exact and the model is independent fair bits.
pub fn exact_expected_error(
    b: &BlockRepresentation,
    law: &ForecastLaw,
    model: &BlockMeanModel,
) -> Result<ErrorEstimate, EvalError> {
    if model.m() != b.m() {
        return Err(AdversaryError::Dimension {
            model: model.m(),
            got: b.m(),
        }
        .into());
    }
    let exact_route = law.is_exact() && *model.structure() == Structure::Independent;
    if exact_route {
        let mut total = BigRational::zero();
        for e in &law.entries {
            let p = e.exact.as_ref().expect("exact law");
            total += p * bernoulli_exact_error(b, &e.forecast);
        }
        let mean = total.to_f64().unwrap_or(f64::NAN);
        return Ok(ErrorEstimate::exact(mean, Some(total)));
    }
    let mut mean = 0.0;
    for e in &law.entries {
        let (c0, c) = law_coefficients(b, &e.forecast);
        mean += e.probability * model.expected_square(c0, &c)?;
    }
    Ok(ErrorEstimate::exact(mean, None))
}
