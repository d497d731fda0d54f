use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("radical inverse base must be at least 2, got {0}")]
    InvalidBase(u64),
    #[error("digit permutation for base {base} is not a bijection on 0..{base}")]
    InvalidPermutation { base: u64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("coordinate {value} lies outside [0, 1]")]
    OutsideUnitCube { value: f64 },
    #[error(
        "direction table covers {available} dimensions but dimension {requested} was requested"
    )]
    DirectionTableDimensions { requested: usize, available: usize },
    #[error("dimension {dim}: {required} direction bits required, at most {available} supported")]
    DirectionTableBits {
        dim: usize,
        required: u32,
        available: u32,
    },
    #[error("direction numbers, line {line}: {message}")]
    DirectionParse { line: usize, message: String },
    #[error("grid of {per_axis}^{dim} points overflows")]
    GridOverflow { per_axis: usize, dim: usize },
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("smoothness index must be 0, 1 or 2, got {0}")]
    UnsupportedSmoothness(u32),
    #[error("nodes {first} and {second} coincide and jitter is zero: Gram matrix is singular")]
    DuplicateNodes { first: usize, second: usize },
    #[error("factorization failed (condition estimate {condition:e})")]
    Factorization { condition: f64 },
    #[error("alpha = {alpha} must exceed alpha_L = {alpha_l}; use plain QMC instead")]
    SplitUndefined { alpha: f64, alpha_l: f64 },
    #[error("budget of {budget} evaluations is too small to split")]
    BudgetTooSmall { budget: usize },
    #[error("slope fit needs at least 2 points with positive RMSE, got {0}")]
    TooFewPoints(usize),
    #[error("probability {0} must lie strictly inside (0, 1)")]
    ProbabilityOutOfRange(f64),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
