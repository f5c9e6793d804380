use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("chi-square undefined: q[{index}] = 0 while p[{index}] > 0")]
    SupportViolation { index: usize },

    #[error("sparsity s = {s} out of range for k = {k}")]
    SparsityOutOfRange { k: usize, s: usize },

    #[error("alpha = {0} out of range")]
    AlphaOutOfRange(f64),

    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("empty input")]
    Empty,

    #[error("n = {n} users is fewer than K = {dim} Hadamard groups")]
    TooFewUsers { n: usize, dim: usize },

    #[error("invalid message batch: {0}")]
    InvalidMessages(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("enumeration of {count} packing indices exceeds budget {budget}")]
    EnumerationBudget { count: f64, budget: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
