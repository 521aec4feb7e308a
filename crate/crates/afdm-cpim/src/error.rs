//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("permutation index {index} out of range [1, {order}!]")]
    IndexOutOfRange { index: u128, order: usize },

    #[error("permutation order {0} exceeds the largest supported order 34 (34! is the largest factorial representable in 128 bits)")]
    OrderTooLarge(usize),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("path delay {delay} out of range for N = {n}")]
    DelayOutOfRange { delay: usize, n: usize },

    #[error("channel sampler error: {0}")]
    Sampler(String),

    #[error("negative noise variance {0}")]
    NegativeNoise(f64),

    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),

    #[error("bit vector length {got} does not match required length {expected}")]
    BitLength { expected: usize, got: usize },

    #[error("codeword index {k} out of range [1, {kmax}]")]
    CodewordOutOfRange { k: usize, kmax: usize },

    #[error("unsupported constellation order {0} (supported: 2, 4, 16)")]
    UnsupportedConstellation(usize),

    #[error("{context}: search space of {candidates} candidates exceeds the budget of {budget}; {hint}")]
    BudgetExceeded {
        context: &'static str,
        candidates: u128,
        budget: u128,
        hint: &'static str,
    },

    #[error("numerical failure: {message} (condition estimate {cond_estimate:.3e})")]
    Numerical {
        message: String,
        cond_estimate: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("trial with seed {trial_seed} failed: {message}")]
    TrialFailed { trial_seed: u64, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(expected: usize, got: usize, context: &'static str) -> Self {
        Error::DimensionMismatch {
            expected,
            got,
            context,
        }
    }
}
