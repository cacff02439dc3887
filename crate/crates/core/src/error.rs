use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("time must be {requirement}, got {value}")]
    InvalidTime { value: f64, requirement: &'static str },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
    #[error("spectral operator has no growth law; asymptotic verdict unavailable")]
    MissingGrowthLaw,
    #[error("lambda {lambda} is below the contraction threshold {threshold}")]
    NotContractive { lambda: f64, threshold: f64 },
    #[error("fixed point did not converge in {iterations} sweeps (last change {residual:e}, tolerance {tolerance:e})")]
    NoConvergence { iterations: usize, residual: f64, tolerance: f64 },
    #[error("finite-difference noise floor {floor:e} exceeds the curvature signal {signal:e}")]
    StepUnderflow { floor: f64, signal: f64 },
    #[error("Novikov segment too long: per-segment exponent {exponent} exceeds 0.5")]
    SegmentTooLong { exponent: f64 },
    #[error("solution was built for lambda {built}, residual requested at {requested}")]
    SolutionMismatch { built: f64, requested: f64 },
    #[error("drift weights are not square summable")]
    InvalidWeights,
}
