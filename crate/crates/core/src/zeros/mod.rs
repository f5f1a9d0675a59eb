//! Zeros of real solutions and the laws they follow.

mod checks;
mod divisor;
mod enumerate;
pub(crate) mod fit;
mod lemma;
mod report;

pub use checks::{
    gamma_fit, ratio_check, ratio_check_with, robinson_check, robinson_check_with, zhang_check, GammaFit,
    GAMMA_FIT_MIN_M, OFFSET_WINDOW,
};
pub use divisor::{divisor_gf, sigma, DivisorGF};
pub use enumerate::{
    enumerate_zeros, enumerate_zeros_with, AnalyticSolution, RealFunction, ScanOptions, ZeroRecord, ZeroSource,
};
pub use lemma::{lemma_check, lemma_zero_map, LemmaZero};
pub use report::CheckReport;
