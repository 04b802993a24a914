use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("point maps to infinity under the ball/half-space isometry")]
    MapsToInfinity,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("grid too short: need at least {needed} points, got {got}")]
    GridTooShort { needed: usize, got: usize },
    #[error("misaligned arrays: {0} vs {1}")]
    Misaligned(usize, usize),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("bracketing failed: {0}")]
    Bracket(String),
    #[error("residual check failed: {0}")]
    Residual(String),
    #[error("optimisation stalled: {0}")]
    Stall(String),
    #[error("integration failed: {0}")]
    Integration(String),
}

pub type Result<T> = std::result::Result<T, Error>;
