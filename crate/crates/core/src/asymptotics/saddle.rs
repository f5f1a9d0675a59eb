use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::numerics::{GammaEngine, PrecCtx};
use crate::series::check_lambda;

/// Stationary point of `phi(s) = s(s+1)/2 log(lambda) - s x - log Gamma(1-s)`.
#[derive(Debug, Clone)]
pub struct SaddlePoint {
    /// `x = log z`.
    pub x: Complex,
    pub sigma: Complex,
    /// |F(sigma)| with `F(s) = (s + 1/2) log(lambda) - x + psi(1-s)`.
    pub residual: Float,
    pub iterations: usize,
}

pub const SADDLE_X_MIN: f64 = 5.0;
const MAX_ITER: usize = 50;

/// Leading term `(x - log x)/L - 1/2 + log(-L)/L` of the saddle point.
pub fn sigma_leading(x: &Complex, log_lambda: &Float) -> Complex {
    let p = x.prec().0;
    let lx = Complex::with_val(p, x.ln_ref());
    let mut s = Complex::with_val(p, x - &lx);
    s /= log_lambda;
    s -= 0.5f64;
    let ll = Float::with_val(p, Float::with_val(p, -log_lambda).ln_ref());
    s += Float::with_val(p, &ll / log_lambda);
    s
}

/// Newton iteration on the saddle equation from its leading-order solution.
pub fn saddle_solve_with(x: &Complex, log_lambda: &Float, gamma: &GammaEngine, ctx: &PrecCtx) -> Result<SaddlePoint> {
    let p = ctx.bits();
    let xabs = Float::with_val(p, x.abs_ref());
    if xabs < SADDLE_X_MIN {
        return Err(Error::Domain(format!(
            "|x| = {} below the saddle regime (x >= {SADDLE_X_MIN})",
            xabs.to_f64()
        )));
    }
    let tol = Float::with_val(p, &xabs * ctx.target());
    let step_floor = -(p as i32) + 8;
    let mut s = sigma_leading(x, log_lambda);
    let eval = |s: &Complex| -> Result<(Complex, Complex)> {
        let w = Complex::with_val(p, 1 - s);
        let mut f = Complex::with_val(p, s + 0.5f64);
        f *= log_lambda;
        f -= x;
        f += gamma.polygamma(0, &w)?;
        let df = Complex::with_val(p, log_lambda - gamma.polygamma(1, &w)?);
        Ok((f, df))
    };
    for it in 0..MAX_ITER {
        let (f, df) = eval(&s)?;
        let r = Float::with_val(p, f.abs_ref());
        let step = Complex::with_val(p, &f / &df);
        s -= &step;
        let tiny = step.is_zero()
            || crate::numerics::log2_mag(&step)
                .zip(crate::numerics::log2_mag(&s))
                .is_some_and(|(a, b)| a < b + step_floor);
        if r <= tol && tiny {
            let (f, _) = eval(&s)?;
            return Ok(SaddlePoint {
                x: x.clone(),
                sigma: s,
                residual: Float::with_val(p, f.abs_ref()),
                iterations: it + 1,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "saddle point Newton iteration",
        iterations: MAX_ITER,
        last: s.to_string_radix(10, Some(12)),
    })
}

/// Saddle point for real `x = log z`.
pub fn saddle_solve(x: &Float, lambda: &Float, ctx: &PrecCtx) -> Result<SaddlePoint> {
    check_lambda(lambda)?;
    let p = ctx.bits();
    let l = Float::with_val(p, lambda.ln_ref());
    let g = GammaEngine::new(ctx);
    saddle_solve_with(&Complex::with_val(p, (x, 0)), &l, &g, ctx)
}
