//! Power series of the analytic solutions.

mod deformed;
mod pantograph;
mod qprod;
mod sum;

use rug::{Complex, Float};

pub use deformed::{deformed_exp_coeff, deformed_exp_eval, deformed_exp_real, deformed_exp_sum};
pub use pantograph::{
    multipantograph_eval, multipantograph_sum, pantograph_coeff, pantograph_eval_direct, pantograph_eval_truncated,
    pantograph_sum, Degeneracy, MultiPantographParams, PantographParams, TruncOptions, TruncatedEval,
};
pub use qprod::{q_pochhammer, q_pochhammer_recip_coeffs, recip_coeff_sup, QProduct};
pub use sum::{sum_power_series, with_precision_retry, PowerSum};

pub(crate) use deformed::check_lambda;

/// A summed series with a bound on everything left out.
#[derive(Debug, Clone)]
pub struct SeriesTail {
    pub value: Complex,
    pub tail_bound: Float,
    pub terms_used: usize,
}
