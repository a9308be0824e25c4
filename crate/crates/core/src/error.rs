use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the domain")]
    Domain { point: [f64; 3] },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid kernel configuration: {0}")]
    Config(String),
    #[error("operation needs at least two spikes")]
    TooFewSpikes,
    #[error("correlation is singular at x + x' = 0")]
    Singularity,
    #[error("linear system is rank deficient (condition number {condition:e})")]
    RankDeficient { condition: f64 },
    #[error("cannot normalize an identically zero observation")]
    ZeroObservation,
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("not supported by this kernel: {0}")]
    Unsupported(&'static str),
}
