use rug::float::Constant;
use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::numerics::PrecCtx;
use crate::series::{check_lambda, PantographParams};

/// Constants of the leading asymptotic terms.
///
/// `A, B, C` multiply `z^A log(z)^B` for the entire solution of
/// `g' = -g(lambda z)`; `A1, B1` are the exponents for `y' = a y(lambda x)`
/// and `A2, B2` their real parts at `a = -1`, written through `q = 1/lambda`.
#[allow(non_snake_case)]
#[derive(Debug, Clone)]
pub struct AsymptoticConstants {
    pub lambda: Float,
    pub A: Float,
    pub B: Float,
    pub C: Float,
    pub A1: Complex,
    pub B1: Complex,
    pub A2: Float,
    pub B2: Float,
}

#[allow(non_snake_case)]
pub fn constants(lambda: &Float, a: &Complex, ctx: &PrecCtx) -> Result<AsymptoticConstants> {
    check_lambda(lambda)?;
    if a.is_zero() {
        return Err(Error::InvalidParameter("a = 0 has no pantograph asymptotics".into()));
    }
    let p = ctx.bits();
    let l = Float::with_val(p, lambda.ln_ref());
    let ll = Float::with_val(p, Float::with_val(p, -&l).ln_ref()); // log(-log lambda)

    let mut A = Float::with_val(p, 0.5f64);
    A -= Float::with_val(p, l.recip_ref());
    A -= Float::with_val(p, &ll / &l);
    let B = Float::with_val(p, &ll / &l) - 1u32;

    let two_pi = Float::with_val(p, Constant::Pi) * 2u32;
    let mut e = Float::with_val(p, 0.5f64);
    e -= Float::with_val(p, &l / 8u32);
    e += &ll;
    e -= Float::with_val(p, &ll / &l);
    e -= Float::with_val(p, ll.square_ref()) / Float::with_val(p, &l * 2u32);
    e -= Float::with_val(p, two_pi.ln_ref()) / 2u32;
    let C = e.exp();

    // log(-a log lambda), principal branch
    let mut w = Complex::with_val(p, a * &l);
    w = -w;
    let lw = Complex::with_val(p, w.ln_ref());
    let mut A1 = Complex::with_val(p, (0.5f64, 0));
    A1 -= Float::with_val(p, l.recip_ref());
    A1 -= Complex::with_val(p, &lw / &l);
    let B1 = Complex::with_val(p, &lw / &l) - 1u32;

    let lq = Float::with_val(p, -&l);
    let llq = Float::with_val(p, lq.ln_ref());
    let mut A2 = Float::with_val(p, 0.5f64);
    A2 += Float::with_val(p, lq.recip_ref());
    A2 += Float::with_val(p, &llq / &lq);
    let B2 = -Float::with_val(p, &llq / &lq) - 1u32;

    Ok(AsymptoticConstants {
        lambda: Float::with_val(p, lambda),
        A,
        B,
        C,
        A1,
        B1,
        A2,
        B2,
    })
}

/// Non-periodic Kato-McLeod envelope
/// `x^{Re A1} (log x)^{Re B1} exp((log x - log log x)^2 / (2 log q))`
/// for a real solution of `y' = a y(lambda x)`.
pub fn kato_mcleod_envelope(x: &Float, params: &PantographParams, ctx: &PrecCtx) -> Result<Float> {
    if !params.b().is_zero() {
        return Err(Error::InvalidParameter("envelope needs b = 0".into()));
    }
    if !params.a().imag().is_zero() {
        return Err(Error::InvalidParameter("envelope needs real a".into()));
    }
    if *x < 5 {
        return Err(Error::Domain(format!("x = {} < 5", x.to_f64())));
    }
    let p = ctx.bits();
    let k = constants(params.lambda(), params.a(), ctx)?;
    let lx = Float::with_val(p, x.ln_ref());
    let llx = Float::with_val(p, lx.ln_ref());
    let mut out = Float::with_val(p, &lx * k.A1.real());
    out += Float::with_val(p, &llx * k.B1.real());
    let mut d = Float::with_val(p, &lx - &llx);
    d.square_mut();
    let lq = Float::with_val(p, params.q().ln_ref());
    d /= Float::with_val(p, &lq * 2u32);
    out += d;
    Ok(out.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_one_over_e() {
        let c = PrecCtx::default();
        let lam = Float::with_val(256, -1).exp();
        let k = constants(&lam, &c.complex((-1, 0)), &c).unwrap();
        assert!(Float::with_val(256, &k.A - 1.5f64).abs().to_f64() < 1e-70);
        assert!(Float::with_val(256, &k.B + 1u32).abs().to_f64() < 1e-70);
    }

    #[test]
    fn a_plus_b_identity_and_real_parts() {
        let c = PrecCtx::default();
        for &l in &[0.1, 0.5, 0.9] {
            let lam = c.real(l);
            let k = constants(&lam, &c.complex((-1, 0)), &c).unwrap();
            let ln = lam.clone().ln();
            let want = -Float::with_val(256, ln.recip_ref()) - 0.5f64;
            assert!(Float::with_val(256, Float::with_val(256, &k.A + &k.B) - &want).abs().to_f64() < 1e-70);
            assert!(Float::with_val(256, k.A1.real() - &k.A2).abs().to_f64() < 1e-70);
            assert!(Float::with_val(256, k.B1.real() - &k.B2).abs().to_f64() < 1e-70);
            assert!(Float::with_val(256, &k.A - &k.A2).abs().to_f64() < 1e-70);
            assert!(k.C > 0);
        }
    }

    #[test]
    fn envelope_ratio() {
        let c = PrecCtx::default();
        let p = PantographParams::real(0.5, -1.0, 0.0, &c).unwrap();
        let e20 = kato_mcleod_envelope(&c.real(20).exp(), &p, &c).unwrap();
        let e19 = kato_mcleod_envelope(&c.real(19).exp(), &p, &c).unwrap();
        let r = Float::with_val(256, &e20 / &e19).ln().to_f64();
        let k = constants(p.lambda(), p.a(), &c).unwrap();
        let lq = 2f64.ln();
        let f = |x: f64| {
            k.A2.to_f64() * x + k.B2.to_f64() * x.ln() + (x - x.ln()).powi(2) / (2.0 * lq)
        };
        assert!((r - (f(20.0) - f(19.0))).abs() < 1e-12);
        assert!(kato_mcleod_envelope(&c.real(3), &p, &c).is_err());
    }
}
