//! Asymptotic machinery for the deformed exponential and an independent
//! contour-integral evaluator.

mod asy;
mod constants;
mod hankel;
mod periodic;
mod saddle;

pub use asy::{asy_neg, asy_neg_closed, asy_neg_with, asy_pos, asy_pos_closed, asy_pos_with, AsyOptions, AsyOrder};
pub use constants::{constants, kato_mcleod_envelope, AsymptoticConstants};
pub use hankel::{hankel_contour_eval, ContourForm};
pub use periodic::{h_fourier, h_theta, k_fourier, k_theta, H_eval, K_eval};
pub use saddle::{saddle_solve, saddle_solve_with, sigma_leading, SaddlePoint, SADDLE_X_MIN};
