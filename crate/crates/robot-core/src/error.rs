use thiserror::Error;

/// Errors shared by all solvers and builders in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point set is empty")]
    EmptyPointSet,

    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("weights must have positive sum")]
    ZeroWeightSum,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("point dimension mismatch: {left} vs {right}")]
    PointDimMismatch { left: usize, right: usize },

    #[error("truncation level must be positive, got {0}")]
    InvalidLambda(f64),

    #[error("entropic regularization must be positive and finite, got {0}")]
    InvalidAlpha(f64),

    #[error("cost matrix must be elementwise nonnegative and finite")]
    InvalidCost,

    #[error("cost matrix is already truncated")]
    AlreadyTruncated,

    #[error("contamination fraction must lie in [0, 1), got {0}")]
    InvalidEpsilon(f64),

    #[error("percentile must lie in (0, 100], got {0}")]
    InvalidPercentile(f64),

    #[error("subsample of size {requested} does not fit twice into {available} points")]
    SubsampleTooLarge { requested: usize, available: usize },

    #[error("plan marginal residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    MarginalResidual { residual: f64, tolerance: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("pivot limit {0} exceeded (degeneracy handling bug)")]
    PivotLimit(usize),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
