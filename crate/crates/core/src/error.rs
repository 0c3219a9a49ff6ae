use thiserror::Error;

/// Errors raised by the analysis and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error("support of p is not contained in support of q (index {index})")]
    AbsoluteContinuityViolated { index: usize },
    #[error("argument out of domain: {0}")]
    DomainError(String),
    #[error("symbol {symbol} out of range for alphabet of size {alphabet_size}")]
    SymbolOutOfRange { symbol: usize, alphabet_size: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("enumeration of {count} items exceeds cap {cap}")]
    EnumerationTooLarge { count: u128, cap: u128 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("output {output} has zero probability but positive joint mass")]
    UnreachableOutput { output: usize },
    #[error("{what} did not converge after {iterations} iterations (gap {gap:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        gap: f64,
    },
    #[error("finite-difference step {step} leaves the simplex interior")]
    StepTooLarge { step: f64 },
    #[error("operating distortion {d} is at the boundary of (0, d_max = {d_max})")]
    BoundaryDistortion { d: f64, d_max: f64 },
    #[error("target rate {rate} outside (0, R(P,0) = {max})")]
    RateOutOfRange { rate: f64, max: f64 },
    #[error("channel capacity {capacity} is not positive")]
    UselessChannel { capacity: f64 },
    #[error("V_sep is undefined at eps = 1/2")]
    UndefinedAtHalf,
    #[error("variance {variance} is too small to standardize")]
    ZeroVariance { variance: f64 },
    #[error("rate {rate} of class {class} exceeds cap H(type) - eta = {cap}")]
    RateCapViolated { class: usize, rate: f64, cap: f64 },
    #[error("delta {delta} exceeds 1/(2|X||Y|) = {max}")]
    DeltaTooLarge { delta: f64, max: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
