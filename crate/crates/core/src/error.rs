use thiserror::Error;

/// Structural problems found while validating a model description.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("transition row ({state},{action}) sums to 1 - {deficit:e}")]
    NonStochasticRow {
        state: usize,
        action: usize,
        deficit: f64,
    },
    #[error("negative or non-finite probability P({next}|{state},{action}) = {value}")]
    InvalidProbability {
        state: usize,
        action: usize,
        next: usize,
        value: f64,
    },
    #[error("reward r({state},{action}) = {value} outside [0, r_max]")]
    RewardOutOfRange { state: usize, action: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::NonStochasticRow { .. } => "NonStochasticRow",
            ModelError::InvalidProbability { .. } => "InvalidProbability",
            ModelError::RewardOutOfRange { .. } => "RewardOutOfRange",
            ModelError::DimensionMismatch(_) => "DimensionMismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("{count} policies exceed enumeration cap {cap}")]
    EnumerationTooLarge { count: u128, cap: u128 },
    #[error("singular linear system")]
    SingularSystem,
    #[error("policy is not in the average-reward evaluable set (gain not unique)")]
    NotInPiAr,
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("model is not weakly communicating; the optimality equation may have no solution")]
    NotSolvableHint,
    #[error("empty vector")]
    EmptyVector,
    #[error("parameter out of domain: {0}")]
    DomainError(String),
    #[error("LIL threshold undefined for zero deviation constant")]
    KZero,
    #[error("diameter is infinite")]
    InfiniteDiameter,
    #[error("T = {t} exceeds horizon + 1 = {limit}")]
    HorizonExceeded { t: usize, limit: usize },
    #[error("value function inconsistent with its evaluation equation (residual {residual:e})")]
    InconsistentValueFunction { residual: f64 },
    #[error("sigma process degenerate: {0}")]
    SigmaDegenerate(String),
    #[error("missing bound parameter: {0}")]
    MissingParameter(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Stable identifier used in machine-readable reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Model(e) => e.code(),
            Error::InvalidPolicy(_) => "InvalidPolicy",
            Error::EnumerationTooLarge { .. } => "EnumerationTooLarge",
            Error::SingularSystem => "SingularSystem",
            Error::NotInPiAr => "NotInPiAr",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::NotSolvableHint => "NotSolvableHint",
            Error::EmptyVector => "EmptyVector",
            Error::DomainError(_) => "DomainError",
            Error::KZero => "KZero",
            Error::InfiniteDiameter => "InfiniteDiameter",
            Error::HorizonExceeded { .. } => "HorizonExceeded",
            Error::InconsistentValueFunction { .. } => "InconsistentValueFunction",
            Error::SigmaDegenerate(_) => "SigmaDegenerate",
            Error::MissingParameter(_) => "MissingParameter",
        }
    }
}
