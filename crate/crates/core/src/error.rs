use thiserror::Error;

/// Failures raised by the filtering primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Every log weight was `-inf`: the particle system is fully depleted.
    #[error("degenerate weights: no finite log weight")]
    DegenerateWeights,
    #[error("non-finite log weight ({0})")]
    NonFiniteWeight(f64),
    #[error("weights are not normalized (sum = {0})")]
    Unnormalized(f64),
    #[error("invalid weight {0}: weights must be finite and nonnegative")]
    InvalidWeight(f64),
    #[error("empty particle set")]
    Empty,
    #[error("particle and weight counts differ ({particles} vs {weights})")]
    LengthMismatch { particles: usize, weights: usize },
    #[error("resample count must be positive")]
    ZeroResampleCount,
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("degenerate innovation covariance")]
    DegenerateInnovation,
    #[error("covariance is not symmetric positive semidefinite")]
    InvalidCovariance,
    #[error("moment function has no closed-form conditional expectation")]
    NoClosedForm,
    #[error("zero denominator in importance-sampling ratio")]
    ZeroDenominator,
    #[error("mode transition row {row} sums to {sum}")]
    TransitionNotStochastic { row: usize, sum: f64 },
    #[error("normalizer vanished for measurement {0}")]
    VanishingNormalizer(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
