use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is rank deficient: |R[{index},{index}]| = {value:e} against max {max:e}")]
    RankDeficient { index: usize, value: f64, max: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    ConvergenceFailure { what: &'static str, iterations: usize },

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("epsilon {value} outside {range}")]
    InvalidEpsilon { value: f64, range: &'static str },

    #[error("sparsity q = {0} must lie in (0, 1]")]
    InvalidSparsity(f64),

    #[error("gamma = 0: the right-hand side is orthogonal to range(A)")]
    InvalidGamma,

    #[error("right-hand side has zero norm")]
    ZeroRhs,

    #[error("matrix has zero Frobenius norm")]
    ZeroMatrix,

    #[error("squared Frobenius norm {0} is below the required 1/24")]
    FrobeniusTooSmall(f64),

    #[error("spectral norm {0} exceeds 1; rescale the input first")]
    SpectralNormTooLarge(f64),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("probability p[{index}] = {prob:e} is below the floor {floor:e}")]
    ProbabilityFloor { index: usize, prob: f64, floor: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input shapes or
    /// parameters).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. } | Error::ConvergenceFailure { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
