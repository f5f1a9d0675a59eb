//! Numerical toolkit for the pantograph equation `y'(z) = a y(lambda z) + b y(z)`.
//!
//! Several independent evaluators of the analytic solutions (power series,
//! Hankel-contour quadrature, saddle-point asymptotics), a method-of-steps
//! solver for arbitrary initial functions, zero enumeration with asymptotic
//! fits, and growth probes for higher-order equations with compressed
//! arguments.

pub mod error;
pub mod numerics;
pub mod series;
pub mod asymptotics;
pub mod solver;
pub mod zeros;
pub mod growth;

pub use error::{Error, Result};

/// Library version, embedded in every CLI artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use numerics::{Complex, Float, PrecCtx};
