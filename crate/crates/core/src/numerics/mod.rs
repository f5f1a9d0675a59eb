mod cheb;
mod gamma;
mod prec;
mod roots;
mod scalar;

pub use cheb::{cheb_fit, cheb_fit_adaptive, ChebInterpolant};
pub use gamma::{digamma, log_gamma, GammaEngine};
pub(crate) use gamma::log2_mag;
pub use prec::PrecCtx;
pub use roots::{refine_root, RootEnclosure};
pub use rug::{Complex, Float};
pub use scalar::{cabs, Scalar};
