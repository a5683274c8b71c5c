//! Hard input distributions, as samplers and as exact block-mean moments.

mod tree;

pub use tree::{
    conditional_variance_check, edge_satisfies, find_technical_edge, high_probability,
    sample_tree_values, AdversaryTree, ConditionalVarianceReport, Edge, NodeKind, TreeNode,
    TreeSample, CONDITIONAL_VARIANCE_TOLERANCE,
};

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num::{BigInt, BigRational, Zero};
use rand::Rng;
use thiserror::Error;

use crate::instance::BlockRepresentation;

/// Longest sequence that will be materialized element by element.
pub const MAX_RENDERED_LENGTH: u128 = 1 << 28;

/// Tolerance for the symmetry and positive-semidefiniteness checks.
pub const MOMENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdversaryError {
    #[error("the tree adversary needs at least 2 blocks")]
    SingleBlockTree,
    #[error("model has dimension {model} but {got} values were supplied")]
    Dimension { model: usize, got: usize },
    #[error("second-moment matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("second moment E[mu_{0}^2] = {1} is outside [0, 1]")]
    DiagonalOutOfRange(usize, f64),
    #[error("mean {1} of block {0} is outside [0, 1]")]
    MeanOutOfRange(usize, f64),
    #[error("covariance has eigenvalue {0}, below -{MOMENT_TOLERANCE}")]
    NotPositiveSemidefinite(f64),
    #[error("sample has {got} leaves but the instance has {expected} blocks")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("sequence length {0} is too long to materialize")]
    SequenceTooLong(u128),
    #[error("interval ({i}, {j}) is not inside blocks 1..={m}")]
    IntervalOutOfRange { i: usize, j: usize, m: usize },
    #[error("unknown adversary `{0}` (expected bernoulli or tree)")]
    Unknown(String),
}

/// Covariance structure of a [`BlockMeanModel`].
#[derive(Debug, Clone, PartialEq)]
pub enum Structure {
    /// Independent fair bits.
    Independent,
    /// Explicit second-moment matrix `M[r][s] = E[mu_r mu_s]`.
    Dense(DMatrix<f64>),
    /// Covariance `sigma(lca(r, s))^2 / 4`.
    Tree(AdversaryTree),
}

/// First and second moments of a random vector of block means.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMeanModel {
    mean: Vec<f64>,
    structure: Structure,
}

pub fn bernoulli_block_model(m: usize) -> BlockMeanModel {
    BlockMeanModel {
        mean: vec![0.5; m],
        structure: Structure::Independent,
    }
}

/// Moments of the tree adversary: every mean is 1/2 and
/// `E[mu_r mu_s] = 1/4 + sigma(lca(r, s))^2 / 4`.
pub fn tree_model_moments(tree: &AdversaryTree) -> BlockMeanModel {
    BlockMeanModel {
        mean: vec![0.5; tree.m()],
        structure: Structure::Tree(tree.clone()),
    }
}

impl BlockMeanModel {
    /// Validates an explicit model.
    pub fn dense(mean: Vec<f64>, second: DMatrix<f64>) -> Result<Self, AdversaryError> {
        let m = mean.len();
        if second.nrows() != m || second.ncols() != m {
            return Err(AdversaryError::Dimension {
                model: m,
                got: second.nrows().max(second.ncols()),
            });
        }
        for (r, &v) in mean.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(AdversaryError::MeanOutOfRange(r, v));
            }
        }
        for r in 0..m {
            let d = second[(r, r)];
            if !(0.0..=1.0).contains(&d) {
                return Err(AdversaryError::DiagonalOutOfRange(r, d));
            }
            for s in r + 1..m {
                if (second[(r, s)] - second[(s, r)]).abs() > MOMENT_TOLERANCE {
                    return Err(AdversaryError::NotSymmetric(r, s));
                }
            }
        }
        let mu = DVector::from_column_slice(&mean);
        let cov = &second - &mu * mu.transpose();
        let cov = (&cov + cov.transpose()) * 0.5;
        let smallest = cov
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if smallest < -MOMENT_TOLERANCE {
            return Err(AdversaryError::NotPositiveSemidefinite(smallest));
        }
        Ok(Self {
            mean,
            structure: Structure::Dense(second),
        })
    }

    pub fn m(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// `E[mu_r mu_s]` for 0-based blocks.
    pub fn second_moment(&self, r: usize, s: usize) -> f64 {
        match &self.structure {
            Structure::Independent => {
                if r == s {
                    0.5
                } else {
                    0.25
                }
            }
            Structure::Dense(mat) => mat[(r, s)],
            Structure::Tree(t) => 0.25 + t.covariance(r, s),
        }
    }

    pub fn second_moment_matrix(&self) -> DMatrix<f64> {
        let m = self.m();
        DMatrix::from_fn(m, m, |r, s| self.second_moment(r, s))
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let mu = DVector::from_column_slice(&self.mean);
        self.second_moment_matrix() - &mu * mu.transpose()
    }

    fn check_dim(&self, got: usize) -> Result<(), AdversaryError> {
        if got != self.m() {
            return Err(AdversaryError::Dimension {
                model: self.m(),
                got,
            });
        }
        Ok(())
    }

    /// `Var(c . mu)`.
    pub fn variance(&self, c: &[f64]) -> Result<f64, AdversaryError> {
        self.check_dim(c.len())?;
        Ok(match &self.structure {
            Structure::Independent => c.iter().map(|x| x * x).sum::<f64>() / 4.0,
            Structure::Tree(t) => t.spread_form(c) / 4.0,
            Structure::Dense(_) => {
                let v = DVector::from_column_slice(c);
                (v.transpose() * self.covariance_matrix() * v)[(0, 0)]
            }
        })
    }

    /// `E[(c0 + c . mu)^2]`.
    pub fn expected_square(&self, c0: f64, c: &[f64]) -> Result<f64, AdversaryError> {
        let var = self.variance(c)?;
        let mean = c0 + c.iter().zip(&self.mean).map(|(a, m)| a * m).sum::<f64>();
        Ok(mean * mean + var)
    }

    /// Exact `E[(c0 + c . mu)^2]`, available for independent fair bits.
    pub fn expected_square_exact(
        &self,
        c0: &BigRational,
        c: &[BigRational],
    ) -> Result<Option<BigRational>, AdversaryError> {
        self.check_dim(c.len())?;
        if self.structure != Structure::Independent {
            return Ok(None);
        }
        let half = BigRational::new(1.into(), 2.into());
        let quarter = BigRational::new(1.into(), 4.into());
        let sum: BigRational = c.iter().sum();
        let sum_sq: BigRational = c.iter().map(|x| x * x).sum();
        let mean = c0 + sum * &half;
        Ok(Some(&mean * &mean + sum_sq * quarter))
    }

    /// `E[phi(a . mu)]` with `phi(x) = x (1 - x)`.
    pub fn expected_phi(&self, a: &[f64]) -> Result<f64, AdversaryError> {
        let first: f64 = a.iter().zip(&self.mean).map(|(x, m)| x * m).sum();
        Ok(first - self.expected_square(0.0, a)?)
    }

    /// Exact `E[phi(a . mu)]` for independent fair bits.
    pub fn expected_phi_exact(&self, a: &[BigRational]) -> Result<Option<BigRational>, AdversaryError> {
        let second = self.expected_square_exact(&BigRational::zero(), a)?;
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        Ok(second.map(|s| a.iter().sum::<BigRational>() * half - s))
    }
}

/// Independent fair bit per block.
pub fn sample_bernoulli_block_means<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    (0..m)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 })
        .collect()
}

/// Block-constant sequence with one fair bit per block.
pub fn sample_bernoulli_sequence<R: Rng + ?Sized>(
    b: &BlockRepresentation,
    rng: &mut R,
) -> Result<Vec<f64>, AdversaryError> {
    let bits = sample_bernoulli_block_means(b.m(), rng);
    expand(b, &bits)
}

/// The sequence of a tree sample: `l_r` copies of each leaf value.
pub fn render_sequence(
    b: &BlockRepresentation,
    sample: &TreeSample,
) -> Result<Vec<f64>, AdversaryError> {
    if sample.block_means().len() != b.m() {
        return Err(AdversaryError::ShapeMismatch {
            expected: b.m(),
            got: sample.block_means().len(),
        });
    }
    expand(b, sample.block_means())
}

/// Expands block values into a sequence of length `n` (the prefix before the
/// origin is filled with 1/2).
pub fn expand(b: &BlockRepresentation, block_values: &[f64]) -> Result<Vec<f64>, AdversaryError> {
    if block_values.len() != b.m() {
        return Err(AdversaryError::ShapeMismatch {
            expected: b.m(),
            got: block_values.len(),
        });
    }
    if b.n() > MAX_RENDERED_LENGTH {
        return Err(AdversaryError::SequenceTooLong(b.n()));
    }
    let mut x = vec![0.5; b.origin() as usize];
    x.reserve(b.total() as usize);
    for (&l, &v) in b.lengths().iter().zip(block_values) {
        x.extend(std::iter::repeat_n(v, l as usize));
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdversaryKind {
    Bernoulli,
    Tree,
}

impl AdversaryKind {
    pub fn name(self) -> &'static str {
        match self {
            AdversaryKind::Bernoulli => "bernoulli",
            AdversaryKind::Tree => "tree",
        }
    }
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdversaryKind {
    type Err = AdversaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bernoulli" => Ok(AdversaryKind::Bernoulli),
            "tree" => Ok(AdversaryKind::Tree),
            other => Err(AdversaryError::Unknown(other.to_string())),
        }
    }
}

/// An adversary instantiated for one instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Adversary {
    Bernoulli { m: usize },
    Tree(AdversaryTree),
}

impl Adversary {
    pub fn new(kind: AdversaryKind, b: &BlockRepresentation) -> Result<Self, AdversaryError> {
        Ok(match kind {
            AdversaryKind::Bernoulli => Adversary::Bernoulli { m: b.m() },
            AdversaryKind::Tree => Adversary::Tree(AdversaryTree::build(b)?),
        })
    }

    pub fn kind(&self) -> AdversaryKind {
        match self {
            Adversary::Bernoulli { .. } => AdversaryKind::Bernoulli,
            Adversary::Tree(_) => AdversaryKind::Tree,
        }
    }

    pub fn model(&self) -> BlockMeanModel {
        match self {
            Adversary::Bernoulli { m } => bernoulli_block_model(*m),
            Adversary::Tree(t) => tree_model_moments(t),
        }
    }

    pub fn sample_block_means<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Adversary::Bernoulli { m } => sample_bernoulli_block_means(*m, rng),
            Adversary::Tree(t) => sample_tree_values(t, rng).block_means().to_vec(),
        }
    }
}
