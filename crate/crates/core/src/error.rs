use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its transpose")]
    NotSymmetric { row: usize, col: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not positive definite: eigenvalue {eigenvalue:e} (largest {largest:e})")]
    NotPositiveDefinite { eigenvalue: f64, largest: f64 },

    #[error("symmetric eigensolver did not converge within {sweeps} iterations (dimension {dim})")]
    EigenNoConvergence { dim: usize, sweeps: usize },

    #[error("invalid block rank {rank} for dimension {dim}")]
    InvalidRank { rank: usize, dim: usize },

    #[error("block probabilities: expected {expected} entries, got {got}")]
    ProbabilityLength { expected: usize, got: usize },

    #[error("block probability {index} is {value:e}; entries must be at least {floor:e}")]
    ProbabilityTooSmall { index: usize, value: f64, floor: f64 },

    #[error("block probabilities sum to {sum}, not 1")]
    ProbabilitySum { sum: f64 },

    #[error("matrix is not orthogonal (max deviation {deviation:e})")]
    NotOrthogonal { deviation: f64 },

    #[error("step size must be positive and finite, got {0}")]
    InvalidStepSize(f64),

    #[error("non-finite gradient at step {step}, position {position:?}")]
    NonFiniteGradient { step: usize, position: Vec<f64> },

    #[error("chain diverged at step {step}: last finite position {last_finite:?}")]
    Diverged { step: usize, last_finite: Vec<f64> },

    #[error("target does not provide a Hessian")]
    HessianUnavailable,

    #[error("schedule requires the ensemble positions")]
    EnsembleMissing,

    #[error("schedule requires the gradient at the current position")]
    GradientMissing,

    #[error("sample set is empty")]
    EmptySamples,

    #[error("sample set has inconsistent dimensions")]
    RaggedSamples,

    #[error("median heuristic needs at least two distinct points")]
    DegenerateBandwidth,

    #[error("kernelized Stein discrepancy needs score values for every sample")]
    MissingScores,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
