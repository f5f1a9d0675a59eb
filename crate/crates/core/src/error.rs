use thiserror::Error;

/// Errors raised by the numerical layers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid precision context: {0}")]
    InvalidPrecision(String),

    #[error("pole of the gamma function at non-positive integer {0}")]
    Pole(i64),

    #[error("non-finite sample at x = {x}")]
    NonFiniteSample { x: f64 },

    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    /// Cancellation consumed the working precision; retry with more bits.
    #[error("precision exhausted: {lost_bits} bits lost to cancellation at {bits}-bit precision")]
    PrecisionExhausted { bits: u32, lost_bits: u32 },

    #[error("b = 0: evaluate through the deformed exponential y(z) = g(-a z)")]
    RescaleToDeformedExp,

    #[error("argument outside the asymptotic domain: {0}")]
    Domain(String),

    #[error("{what} did not converge after {iterations} iterations (last iterate {last})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        last: String,
    },

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    #[error("initial function is discontinuous at x = {x} (jump {jump:e})")]
    DiscontinuousInitial { x: f64, jump: f64 },

    #[error("point {x} lies outside the computed range [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("shifted arguments (beta != 0) are not supported")]
    UnsupportedBeta,

    #[error("solution is complex-valued; zero enumeration needs a real solution")]
    NonReal,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("series in 1/q diverges for q = {0} <= 1")]
    Divergent(f64),

    #[error("too few envelope extrema: found {found}, need {needed}")]
    TooFewExtrema { found: usize, needed: usize },

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
