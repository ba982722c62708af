use alloc::string::String;
use thiserror::Error;

/// Errors raised by the numerical pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("curve is not regular at parameter t = {t} (|c'(t)| = {speed:e})")]
    IrregularCurve { t: f64, speed: f64 },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("point (s = {s}, r = {r}) lies outside the tube (|r| must stay below {bound})")]
    OutOfTube { s: f64, r: f64, bound: f64 },

    #[error("metric is not positive at (s = {s}, r = {r})")]
    NonPositiveMetric { s: f64, r: f64 },

    #[error("tube too thin for confinement: need half-extent {needed:.4e}, tube allows {available:.4e}")]
    TubeTooThin { needed: f64, available: f64 },

    #[error("confining frequency is not positive at s = {s} (omega0 = {value})")]
    NonPositiveFrequency { s: f64, value: f64 },

    #[error("hard-wall width is not positive at s = {s} (w = {value})")]
    NonPositiveWidth { s: f64, value: f64 },

    #[error("operation requires a tuned confinement family")]
    UntunedFamily,

    #[error("unsupported confinement: {0}")]
    UnsupportedConfinement(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("finite-difference slow derivative failed the two-grid check (discrepancy {discrepancy:.3e})")]
    InsufficientResolution { discrepancy: f64 },

    #[error("extrapolation unstable: leading coefficient moved {shift:.3e} between fit windows (scale {scale:.3e})")]
    ExtrapolationUnstable { shift: f64, scale: f64 },

    #[error("spectral extraction needs a configuration symmetric under s -> -s")]
    NotReflectionSymmetric,

    #[error("no classical turning points at energy {energy}")]
    NoTurningPoints { energy: f64 },

    #[error("root finding failed: {0}")]
    RootFind(String),

    #[error("time step {dt:.3e} does not resolve the fast period (limit {limit:.3e})")]
    StepTooLarge { dt: f64, limit: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
