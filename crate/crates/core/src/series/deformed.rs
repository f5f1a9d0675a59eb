use rug::ops::Pow;
use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::numerics::{PrecCtx, Scalar};
use crate::series::sum::{sum_power_series, PowerSum};
use crate::series::SeriesTail;

pub(crate) fn check_lambda(lambda: &Float) -> Result<()> {
    if !(*lambda > 0 && *lambda < 1) {
        return Err(Error::InvalidParameter(format!(
            "lambda out of (0,1): {}",
            lambda.to_f64()
        )));
    }
    Ok(())
}

/// `(-1)^n lambda^(n(n-1)/2) / n!`
pub fn deformed_exp_coeff(lambda: &Float, n: u32, ctx: &PrecCtx) -> Float {
    let p = ctx.bits();
    let e = n as u64 * (n as u64).saturating_sub(1) / 2;
    let mut c = if e <= u32::MAX as u64 {
        Float::with_val(p, lambda.pow(e as u32))
    } else {
        Float::with_val(p, lambda.pow(Float::with_val(p, e)))
    };
    c /= Float::with_val(p, Float::factorial(n));
    if n % 2 == 1 {
        c = -c;
    }
    c
}

/// Term-by-term sum of the deformed exponential at real or complex `z`.
pub fn deformed_exp_sum<T: Scalar>(lambda: &Float, z: &T, want_deriv: bool, prec: u32) -> Result<PowerSum<T>> {
    check_lambda(lambda)?;
    let lam = Float::with_val(prec, lambda);
    let mut pw = Float::with_val(prec, 1);
    sum_power_series(
        z,
        move |n| {
            // r_n = -lambda^n / (n+1)
            let rho = Float::with_val(prec, &pw / (n + 1) as u32);
            pw *= &lam;
            (T::from_real(&Float::with_val(prec, -&rho)), rho)
        },
        want_deriv,
        prec,
    )
}

/// Certified value of `g(z) = sum (-1)^n lambda^(n(n-1)/2) z^n / n!`.
pub fn deformed_exp_eval(lambda: &Float, z: &Complex, ctx: &PrecCtx) -> Result<SeriesTail> {
    let s = deformed_exp_sum(lambda, z, false, ctx.bits())?;
    s.require_relative(ctx)?;
    Ok(SeriesTail {
        value: s.value,
        tail_bound: s.abs_err,
        terms_used: s.terms,
    })
}

/// Real-axis value and derivative `g'(x) = -g(lambda x)` in one pass.
pub fn deformed_exp_real(lambda: &Float, x: &Float, prec: u32) -> Result<PowerSum<Float>> {
    deformed_exp_sum(lambda, x, true, prec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients() {
        let c = PrecCtx::default();
        let half = c.real(0.5);
        assert_eq!(deformed_exp_coeff(&half, 0, &c), 1);
        assert_eq!(deformed_exp_coeff(&half, 1, &c), -1);
        let want = -(c.real(1) / 8u32) / 6u32;
        assert_eq!(deformed_exp_coeff(&half, 3, &c), want);
    }

    #[test]
    fn value_at_one_against_direct_sum() {
        let c = PrecCtx::default();
        let hi = PrecCtx::with_bits(512).unwrap();
        let half = c.real(0.5);
        // 200 terms of the coefficient formula at 512 bits
        let mut direct = hi.real(0);
        for n in 0..200 {
            direct += deformed_exp_coeff(&hi.real(0.5), n, &hi);
        }
        let v = deformed_exp_eval(&half, &c.complex((1, 0)), &c).unwrap();
        let d = Float::with_val(512, v.value.real() - &direct).abs();
        assert!(d.to_f64() < 1e-70, "{d}");
        assert!(v.tail_bound.to_f64() < 1e-70);
    }

    #[test]
    fn zero_argument() {
        let c = PrecCtx::default();
        let v = deformed_exp_eval(&c.real(0.3), &c.complex((0, 0)), &c).unwrap();
        assert_eq!(*v.value.real(), 1);
    }

    #[test]
    fn derivative_is_delayed_value() {
        let c = PrecCtx::default();
        let lam = c.real(0.5);
        let x = c.real(37.2);
        let s = deformed_exp_real(&lam, &x, 256).unwrap();
        let delayed = deformed_exp_real(&lam, &c.real(18.6), 256).unwrap();
        let d = Float::with_val(256, s.deriv.unwrap() + &delayed.value).abs();
        assert!(d.to_f64() < 1e-60 * s.max_term.to_f64());
    }

    #[test]
    fn cancellation_is_reported() {
        let c = PrecCtx::with_bits(64).unwrap();
        let r = deformed_exp_eval(&c.real(0.9), &c.complex((60, 0)), &c);
        assert!(matches!(r, Err(Error::PrecisionExhausted { .. })));
    }
}
