//! Error type shared by the toolkit.

use thiserror::Error;

/// Errors raised by encoding, decoding and the analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid code parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("NaN score in section {section}")]
    NanScore { section: usize },
    #[error("messages have different code parameters")]
    ParamMismatch,
    #[error("output {value} is not in the {channel} alphabet")]
    OutputOutOfAlphabet { channel: &'static str, value: f64 },
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("zero normalizer at component {index}: observation impossible under the channel")]
    ZeroNormalizer { index: usize },
    #[error("decoder diverged at iteration {iteration}")]
    Divergence { iteration: usize },
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("invalid coupling parameters: {0}")]
    InvalidCoupling(String),
    #[error("invalid channel specification: {0}")]
    InvalidChannel(String),
    #[error("rate bracket [{lo}, {hi}] does not straddle the transition")]
    BracketNotStraddling { lo: f64, hi: f64 },
    #[error("no two-minima region found in rate bracket [{lo}, {hi}]")]
    NoHardPhase { lo: f64, hi: f64 },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
