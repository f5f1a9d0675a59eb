//! Saddle-point asymptotics of the deformed exponential `g`.

use rug::{Complex, Float};

use crate::asymptotics::constants::constants;
use crate::asymptotics::periodic::{h_theta, k_theta};
use crate::asymptotics::saddle::{saddle_solve_with, sigma_leading, SaddlePoint};
use crate::error::{Error, Result};
use crate::numerics::{GammaEngine, PrecCtx};
use crate::series::check_lambda;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AsyOrder {
    /// `e^{phi(sigma)}` times the periodic factor at the exact saddle.
    #[default]
    Leading,
    /// Leading term with the exact Gaussian width `phi''(sigma)` and the cubic
    /// skew `phi'''(sigma)/6` inside the residue sum.
    Refined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsyOptions {
    /// Sector margin: requires `|Arg z| <= pi - eps`.
    pub eps: f64,
    /// Smallest admissible `log|z|`.
    pub x_min: f64,
    pub order: AsyOrder,
}

impl Default for AsyOptions {
    fn default() -> Self {
        Self {
            eps: 0.1,
            x_min: 5.0,
            order: AsyOrder::Leading,
        }
    }
}

fn log_in_sector(z: &Complex, opts: &AsyOptions, prec: u32) -> Result<Complex> {
    if z.is_zero() {
        return Err(Error::Domain("z = 0".into()));
    }
    let x = Complex::with_val(prec, z.ln_ref());
    let arg = x.imag().to_f64();
    if arg.abs() > std::f64::consts::PI - opts.eps {
        return Err(Error::Domain(format!(
            "|Arg z| = {:.4} exceeds pi - {}",
            arg.abs(),
            opts.eps
        )));
    }
    if x.real().to_f64() < opts.x_min {
        return Err(Error::Domain(format!(
            "log|z| = {:.4} below {}",
            x.real().to_f64(),
            opts.x_min
        )));
    }
    Ok(x)
}

/// `phi(s) = s(s+1)/2 L - s x - log Gamma(1-s)`.
pub(crate) fn phi(s: &Complex, x: &Complex, l: &Float, gamma: &GammaEngine) -> Result<Complex> {
    let p = s.prec().0;
    let mut e = Complex::with_val(p, s + 1u32);
    e *= s;
    e *= l;
    e /= 2u32;
    e -= Complex::with_val(p, s * x);
    e -= gamma.ln_gamma(&Complex::with_val(p, 1 - s))?;
    Ok(e)
}

fn refined_sum(sp: &SaddlePoint, l: &Float, alternating: bool, gamma: &GammaEngine) -> Result<Complex> {
    let p = sp.sigma.prec().0;
    let w = Complex::with_val(p, 1 - &sp.sigma);
    let width = Complex::with_val(p, l - gamma.polygamma(1, &w)?);
    let skew = gamma.polygamma(2, &w)? / 6u32;
    let skew = Complex::with_val(p, skew);
    let half_w = Complex::with_val(p, &width / 2u32);
    let center = sp.sigma.real().to_f64().round() as i64;
    let budget = (p as f64 + 16.0) * std::f64::consts::LN_2;
    let reach = (2.0 * budget / -width.real().to_f64()).sqrt().ceil() as i64 + 2;
    let mut acc = Complex::new(p);
    for n in (center - reach)..=(center + reach) {
        let u = Complex::with_val(p, n - &sp.sigma);
        let u2 = Complex::with_val(p, u.square_ref());
        let mut t = Complex::with_val(p, &u2 * &half_w);
        t.exp_mut();
        let mut cubic = Complex::with_val(p, &u2 * &u);
        cubic *= &skew;
        cubic += 1u32;
        t *= &cubic;
        if alternating && n.rem_euclid(2) == 1 {
            acc -= &t;
        } else {
            acc += &t;
        }
    }
    Ok(acc)
}

fn saddle_value(z: &Complex, lambda: &Float, opts: &AsyOptions, ctx: &PrecCtx, alternating: bool) -> Result<Complex> {
    check_lambda(lambda)?;
    let p = ctx.bits();
    let x = log_in_sector(z, opts, p)?;
    let l = Float::with_val(p, lambda.ln_ref());
    let gamma = GammaEngine::new(ctx);
    let sp = saddle_solve_with(&x, &l, &gamma, ctx)?;
    let mut v = phi(&sp.sigma, &x, &l, &gamma)?;
    v.exp_mut();
    let periodic = match opts.order {
        AsyOrder::Leading if alternating => h_theta(&sp.sigma, &l, p),
        AsyOrder::Leading => k_theta(&sp.sigma, &l, p),
        AsyOrder::Refined => refined_sum(&sp, &l, alternating, &gamma)?,
    };
    v *= &periodic;
    Ok(v)
}

/// Asymptotic value of `g(z)` for `|Arg z| <= pi - eps`.
pub fn asy_pos(z: &Complex, lambda: &Float, ctx: &PrecCtx) -> Result<Complex> {
    asy_pos_with(z, lambda, &AsyOptions::default(), ctx)
}

pub fn asy_pos_with(z: &Complex, lambda: &Float, opts: &AsyOptions, ctx: &PrecCtx) -> Result<Complex> {
    saddle_value(z, lambda, opts, ctx, true)
}

/// Asymptotic value of `g(-z)` for `|Arg z| <= pi - eps`.
pub fn asy_neg(z: &Complex, lambda: &Float, ctx: &PrecCtx) -> Result<Complex> {
    asy_neg_with(z, lambda, &AsyOptions::default(), ctx)
}

pub fn asy_neg_with(z: &Complex, lambda: &Float, opts: &AsyOptions, ctx: &PrecCtx) -> Result<Complex> {
    saddle_value(z, lambda, opts, ctx, false)
}

fn closed_form(z: &Complex, lambda: &Float, opts: &AsyOptions, ctx: &PrecCtx, alternating: bool) -> Result<Complex> {
    check_lambda(lambda)?;
    let p = ctx.bits();
    let x = log_in_sector(z, opts, p)?;
    let l = Float::with_val(p, lambda.ln_ref());
    let k = constants(lambda, &Complex::with_val(p, (-1, 0)), ctx)?;
    let lx = Complex::with_val(p, x.ln_ref());
    // C z^A (log z)^B exp(-(log z - log log z)^2 / (2L)) * periodic(sigma_0)
    let mut e = Complex::with_val(p, &x * &k.A);
    e += Complex::with_val(p, &lx * &k.B);
    let mut d = Complex::with_val(p, &x - &lx);
    d.square_mut();
    d /= Float::with_val(p, &l * 2u32);
    e -= d;
    e.exp_mut();
    e *= &k.C;
    let s0 = sigma_leading(&x, &l);
    let per = if alternating { h_theta(&s0, &l, p) } else { k_theta(&s0, &l, p) };
    e *= &per;
    Ok(e)
}

/// Closed form with the constants `A, B, C` and the periodic factor at the
/// leading-order saddle; converges to `g(z)` only like `O(log^2 x / x)`.
pub fn asy_pos_closed(z: &Complex, lambda: &Float, ctx: &PrecCtx) -> Result<Complex> {
    closed_form(z, lambda, &AsyOptions::default(), ctx, true)
}

pub fn asy_neg_closed(z: &Complex, lambda: &Float, ctx: &PrecCtx) -> Result<Complex> {
    closed_form(z, lambda, &AsyOptions::default(), ctx, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::deformed_exp_eval;

    fn rel(a: &Complex, b: &Complex) -> f64 {
        let d = Complex::with_val(a.prec().0, a - b);
        d.abs().real().to_f64() / b.clone().abs().real().to_f64()
    }

    #[test]
    fn neg_is_positive_and_improves() {
        let c = PrecCtx::with_bits(512).unwrap();
        let lam = c.real(0.5);
        let mut last = f64::INFINITY;
        for x in [10, 15, 20] {
            let z = Complex::with_val(512, (c.real(x).exp(), 0));
            let a = asy_neg(&z, &lam, &c).unwrap();
            assert!(*a.real() > 0);
            let g = deformed_exp_eval(&lam, &Complex::with_val(512, -&z), &c).unwrap();
            let r = rel(&a, &g.value);
            assert!(r < last);
            last = r;
        }
    }

    #[test]
    fn refined_is_much_closer() {
        let c = PrecCtx::with_bits(512).unwrap();
        let lam = c.real(0.5);
        let z = Complex::with_val(512, (c.real(15).exp(), 0));
        let opts = AsyOptions {
            order: AsyOrder::Refined,
            ..Default::default()
        };
        let a = asy_neg_with(&z, &lam, &opts, &c).unwrap();
        let g = deformed_exp_eval(&lam, &Complex::with_val(512, -&z), &c).unwrap();
        assert!(rel(&a, &g.value) < 1e-3);
    }

    #[test]
    fn sector_and_ray() {
        let c = PrecCtx::default();
        let lam = c.real(0.5);
        let r = c.real(20).exp();
        let z = Complex::with_val(256, (&r, 0)) * Complex::with_val(256, (0, std::f64::consts::FRAC_PI_4)).exp();
        assert!(asy_pos(&z, &lam, &c).unwrap().real().is_finite());
        let bad = Complex::with_val(256, (-&r, 1));
        assert!(matches!(asy_pos(&bad, &lam, &c), Err(Error::Domain(_))));
    }
}
