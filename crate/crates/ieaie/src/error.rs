use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid control parameter mu={0}: must lie in [0.37,0.38] ∪ [0.4,0.42] ∪ [0.44,0.93]")]
    InvalidMu(f64),
    #[error("seed component {name}={value} outside [0,1]")]
    SeedOutOfRange { name: &'static str, value: f64 },
    #[error("non-finite input: {0}")]
    NonFinite(f64),
    #[error("image dimensions {m}x{n} invalid: {reason}")]
    BadDimensions { m: usize, n: usize, reason: &'static str },
    #[error("vector of length {len} is not a permutation of 1..={range}")]
    NotAPermutation { len: usize, range: usize },
    #[error("state space of {states} points exceeds cap of {cap}")]
    StateCapExceeded { states: u128, cap: u64 },
    #[error("value map is not injective on present values (value {0} collides)")]
    NonInjectiveValueMap(u8),
    #[error("images have mismatched dimensions: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("craft values must be pairwise distinct: a={a} b={b} c={c}")]
    CraftValuesNotDistinct { a: u8, b: u8, c: u8 },
    #[error("differential is all-zero: degenerate query")]
    ZeroDifferential,
    #[error("keystream-class violation at position ({0}, {1})")]
    ClassViolation(usize, usize),
    #[error("strict-paper modulus convention requires a square image, got {0}x{1}")]
    StrictPaperNonSquare(usize, usize),
    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
