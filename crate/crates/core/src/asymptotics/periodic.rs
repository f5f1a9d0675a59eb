//! The periodic factors H (period 2) and K (period 1), each in its theta-sum
//! and Fourier form.

use rug::float::Constant;
use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::numerics::PrecCtx;
use crate::series::check_lambda;

/// Weights of the theta sum: `sum_n w(n) e^{(n-y)^2 L / 2}`.
fn theta_sum(y: &Complex, log_lambda: &Float, alternating: bool, prec: u32) -> Complex {
    let center = y.real().to_f64().round() as i64;
    let half_l = Float::with_val(prec, log_lambda / 2u32);
    // stop when (n - y)^2 |L| / 2 exceeds the precision budget
    let budget = (prec as f64 + 16.0) * std::f64::consts::LN_2;
    let reach = (2.0 * budget / -log_lambda.to_f64()).sqrt().ceil() as i64 + 2;
    let mut acc = Complex::new(prec);
    for n in (center - reach)..=(center + reach) {
        let mut u = Complex::with_val(prec, y - n);
        u = -u;
        u.square_mut();
        u *= &half_l;
        u.exp_mut();
        if alternating && n.rem_euclid(2) == 1 {
            acc -= &u;
        } else {
            acc += &u;
        }
    }
    acc
}

/// `sqrt(2 pi / -L) sum_k e^{c_k pi^2 / L} e^{i pi f_k y}` with either odd
/// frequencies (H) or even ones (K).
fn fourier_sum(y: &Complex, log_lambda: &Float, odd: bool, prec: u32) -> Complex {
    let pi = Float::with_val(prec, Constant::Pi);
    let pi2_over_l = Float::with_val(prec, pi.square_ref()) / log_lambda;
    let mut acc = Complex::new(prec);
    let cutoff = -((prec + 16) as f64) * std::f64::consts::LN_2;
    let eta = y.imag().to_f64().abs();
    for k in 0i64.. {
        // frequency f in units of pi
        let (f, coeff) = if odd {
            let f = 2 * k + 1;
            (f, Float::with_val(prec, &pi2_over_l * (f * f) as u64) / 2u32)
        } else {
            let f = 2 * k;
            (f, Float::with_val(prec, &pi2_over_l * (2 * k * k) as u64))
        };
        // pairs +f and -f give 2 cos(pi f y) (or the single k = 0 term)
        let mut arg = Complex::with_val(prec, y * &pi);
        arg *= f;
        let c = Complex::with_val(prec, arg.cos_ref());
        let mut term = Complex::with_val(prec, coeff.exp_ref());
        term *= &c;
        if f != 0 {
            term *= 2u32;
        }
        acc += &term;
        if coeff.to_f64() + std::f64::consts::PI * (f as f64) * eta < cutoff {
            break;
        }
    }
    let mut scale = Float::with_val(prec, &pi * 2u32);
    scale /= Float::with_val(prec, -log_lambda);
    scale.sqrt_mut();
    acc *= &scale;
    acc
}

/// H(y) as the alternating theta sum.
pub fn h_theta(y: &Complex, log_lambda: &Float, prec: u32) -> Complex {
    theta_sum(y, log_lambda, true, prec)
}

/// H(y) from its Fourier series (odd frequencies only).
pub fn h_fourier(y: &Complex, log_lambda: &Float, prec: u32) -> Complex {
    fourier_sum(y, log_lambda, true, prec)
}

/// K(y) as the positive theta sum.
pub fn k_theta(y: &Complex, log_lambda: &Float, prec: u32) -> Complex {
    theta_sum(y, log_lambda, false, prec)
}

/// K(y) from its Fourier series.
pub fn k_fourier(y: &Complex, log_lambda: &Float, prec: u32) -> Complex {
    fourier_sum(y, log_lambda, false, prec)
}

fn dual_eval(x: &Float, lambda: &Float, ctx: &PrecCtx, odd: bool) -> Result<Float> {
    check_lambda(lambda)?;
    let p = ctx.bits();
    let l = Float::with_val(p, lambda.ln_ref());
    let y = Complex::with_val(p, (x, 0));
    let (t, f) = if odd {
        (h_theta(&y, &l, p), h_fourier(&y, &l, p))
    } else {
        (k_theta(&y, &l, p), k_fourier(&y, &l, p))
    };
    // both forms are O(sqrt(2 pi / -L)); compare on that scale, since H has zeros
    let mut scale = Float::with_val(p, Constant::Pi) * 2u32;
    scale /= Float::with_val(p, -&l);
    scale.sqrt_mut();
    let d = Float::with_val(p, Complex::with_val(p, &t - &f).abs_ref());
    if d > Float::with_val(p, &scale * ctx.target()) {
        return Err(Error::NonConvergence {
            what: if odd { "H dual representation" } else { "K dual representation" },
            iterations: 1,
            last: format!("{:e}", d.to_f64()),
        });
    }
    Ok(f.real().clone())
}

/// H at a real point; the theta and Fourier forms are both evaluated and
/// must agree to the target accuracy.
#[allow(non_snake_case)]
pub fn H_eval(x: &Float, lambda: &Float, ctx: &PrecCtx) -> Result<Float> {
    dual_eval(x, lambda, ctx, true)
}

/// K at a real point, checked against its theta form; strictly positive.
#[allow(non_snake_case)]
pub fn K_eval(x: &Float, lambda: &Float, ctx: &PrecCtx) -> Result<Float> {
    let k = dual_eval(x, lambda, ctx, false)?;
    debug_assert!(k > 0);
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_symmetries() {
        let c = PrecCtx::default();
        let lam = c.real(0.5);
        for &x in &[0.3, -1.7, 2.25] {
            let x = c.real(x);
            let h = H_eval(&x, &lam, &c).unwrap();
            let h1 = H_eval(&Float::with_val(256, &x + 1u32), &lam, &c).unwrap();
            let h2 = H_eval(&Float::with_val(256, &x + 2u32), &lam, &c).unwrap();
            assert!(Float::with_val(256, &h + &h1).abs().to_f64() < 1e-60);
            assert!(Float::with_val(256, &h - &h2).abs().to_f64() < 1e-60);
        }
    }

    #[test]
    fn k_at_zero_against_ten_terms() {
        let c = PrecCtx::default();
        let l = c.real(0.5).ln();
        let k = K_eval(&c.real(0), &c.real(0.5), &c).unwrap();
        let pi = c.pi();
        let mut s = c.real(1);
        for j in 1..=10u32 {
            let e = Float::with_val(256, pi.square_ref()) * (2 * j * j) / &l;
            s += Float::with_val(256, e.exp_ref()) * 2u32;
        }
        let scale = (Float::with_val(256, &pi * 2u32) / Float::with_val(256, -&l)).sqrt();
        let want = s * scale;
        assert!(Float::with_val(256, &k - &want).abs().to_f64() < 1e-60);
        let km = K_eval(&c.real(-0.37), &c.real(0.5), &c).unwrap();
        let kp = K_eval(&c.real(0.37), &c.real(0.5), &c).unwrap();
        assert!(Float::with_val(256, &km - &kp).abs().to_f64() < 1e-60);
    }

    #[test]
    fn complex_argument_forms_agree() {
        let c = PrecCtx::default();
        let l = c.real(0.3).ln();
        let y = c.complex((-12.4, 0.8));
        let d = Complex::with_val(256, h_theta(&y, &l, 256) - h_fourier(&y, &l, 256));
        assert!(d.abs().real().to_f64() < 1e-60);
        let d = Complex::with_val(256, k_theta(&y, &l, 256) - k_fourier(&y, &l, 256));
        assert!(d.abs().real().to_f64() < 1e-60);
    }
}
