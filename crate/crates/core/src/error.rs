use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Validation failures carry the size of the violation so callers can
/// report by how much an input missed its invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} exceeds the configured maximum {max}")]
    DimensionOverflow { dim: usize, max: usize },

    #[error("invalid matrix shape: {0}")]
    Shape(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("not Hermitian: max asymmetry {max_asymmetry:e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("not positive: min eigenvalue {min_eigenvalue:e} below -{tol:e}")]
    NotPositive { min_eigenvalue: f64, tol: f64 },

    #[error("trace violation: trace {trace} deviates from 1 by {deviation:e}")]
    TraceViolation { trace: f64, deviation: f64 },

    #[error("not a projection: {0}")]
    NotProjection(String),

    #[error("vector norm {norm:e} is too small to normalize")]
    ZeroVector { norm: f64 },

    #[error("weights must sum to 1, got {sum}")]
    WeightSum { sum: f64 },

    #[error("weight {weight} outside (0, 1]")]
    InvalidWeight { weight: f64 },

    #[error("a mixture needs at least one child")]
    EmptyMix,

    #[error("not unitary: max deviation of U\u{2020}U from I is {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("probability defect {defect:e}")]
    ProbabilityDefect { defect: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Stable machine-readable code for the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::DimensionOverflow { .. } => "dimension_overflow",
            Error::Shape(_) => "shape",
            Error::NonFinite { .. } => "non_finite",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::NotPositive { .. } => "not_positive",
            Error::TraceViolation { .. } => "trace_violation",
            Error::NotProjection(_) => "not_projection",
            Error::ZeroVector { .. } => "zero_vector",
            Error::WeightSum { .. } => "weight_sum",
            Error::InvalidWeight { .. } => "invalid_weight",
            Error::EmptyMix => "empty_mix",
            Error::NotUnitary { .. } => "not_unitary",
            Error::InvalidBasis(_) => "invalid_basis",
            Error::ProbabilityDefect { .. } => "probability_defect",
            Error::InvalidConfig(_) => "invalid_config",
        }
    }

    /// True for errors about shapes, sizes and configuration rather than
    /// about the numerical content of an operator.
    pub fn is_dimensional(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::DimensionOverflow { .. }
                | Error::InvalidConfig(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
