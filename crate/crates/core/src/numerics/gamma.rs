//! Complex log-gamma and polygamma functions.
//!
//! Arguments are shifted upward by the recurrence until `Re w >= R0`, where the
//! Stirling series converges to working precision; `R0` grows with the
//! precision so that the smallest Stirling term stays below `2^-bits`.

use std::f64::consts::TAU;

use rug::float::Constant;
use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::numerics::PrecCtx;

/// Reusable evaluator holding the Bernoulli table for one precision.
#[derive(Debug, Clone)]
pub struct GammaEngine {
    prec: u32,
    shift_to: u32,
    /// B_2, B_4, ... as floats.
    bernoulli: Vec<Float>,
    half_ln_two_pi: Float,
    two_pi: Float,
}

impl GammaEngine {
    pub fn new(ctx: &PrecCtx) -> Self {
        let prec = ctx.bits();
        let shift_to = 20u32.max((0.12 * prec as f64).ceil() as u32);
        let pi = Float::with_val(prec, Constant::Pi);
        let two_pi = Float::with_val(prec, &pi * 2u32);
        let r0 = Float::with_val(prec, shift_to);

        // B_2k = (-1)^(k+1) 2 (2k)! zeta(2k) / (2 pi)^(2k)
        let mut bernoulli = Vec::new();
        let mut two_pi_pow = Float::with_val(prec, &two_pi * &two_pi);
        let two_pi_sq = two_pi_pow.clone();
        let mut r0_pow = Float::with_val(prec, &r0 * &r0);
        let r0_sq = r0_pow.clone();
        let cutoff = -(prec as i32) - 8;
        for k in 1..=(8 * shift_to) {
            let n = 2 * k;
            let mut b = Float::with_val(prec, Float::factorial(n));
            b *= Float::with_val(prec, Float::zeta_u(n));
            b *= 2u32;
            b /= &two_pi_pow;
            if k % 2 == 0 {
                b = -b;
            }
            let small = Float::with_val(prec, &b / &r0_pow);
            bernoulli.push(b);
            if small.is_zero() || small.get_exp().is_some_and(|e| e < cutoff) {
                break;
            }
            two_pi_pow *= &two_pi_sq;
            r0_pow *= &r0_sq;
        }

        let half_ln_two_pi = Float::with_val(prec, two_pi.ln_ref()) / 2u32;
        Self {
            prec,
            shift_to,
            bernoulli,
            half_ln_two_pi,
            two_pi,
        }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    fn check_pole(z: &Complex) -> Result<()> {
        if z.imag().is_zero() && *z.real() <= 0 && z.real().is_integer() {
            let n = z.real().to_f64() as i64;
            return Err(Error::Pole(n));
        }
        Ok(())
    }

    /// Number of unit shifts so that `Re(z + n) >= R0`.
    fn shift_count(&self, z: &Complex) -> u32 {
        let re = z.real().to_f64();
        if re >= self.shift_to as f64 {
            0
        } else {
            (self.shift_to as f64 - re).ceil() as u32
        }
    }

    fn shifted(&self, z: &Complex, n: u32) -> Complex {
        Complex::with_val(self.prec, z + n)
    }

    /// Stirling series for log Gamma(w), `Re w >= R0`.
    fn stirling_ln(&self, w: &Complex) -> Complex {
        let p = self.prec;
        let ln_w = Complex::with_val(p, w.ln_ref());
        let mut acc = Complex::with_val(p, w - 0.5f64);
        acc *= &ln_w;
        acc -= w;
        acc += &self.half_ln_two_pi;

        let inv = Complex::with_val(p, w.recip_ref());
        let inv2 = Complex::with_val(p, inv.square_ref());
        let mut pw = inv;
        for (i, b) in self.bernoulli.iter().enumerate() {
            let k = (i + 1) as u32;
            let mut term = Complex::with_val(p, &pw * b);
            term /= 2 * k * (2 * k - 1);
            acc += &term;
            if negligible(&term, &acc, p) {
                break;
            }
            pw *= &inv2;
        }
        acc
    }

    /// Principal branch of log Gamma(z).
    pub fn ln_gamma(&self, z: &Complex) -> Result<Complex> {
        Self::check_pole(z)?;
        let p = self.prec;
        let n = self.shift_count(z);
        let w = self.shifted(z, n);
        let mut out = self.stirling_ln(&w);
        if n > 0 {
            let mut prod = Complex::with_val(p, (1, 0));
            let mut arg_sum = 0.0f64;
            let zi = z.imag().to_f64();
            let zr = z.real().to_f64();
            for j in 0..n {
                let f = Complex::with_val(p, z + j);
                prod *= &f;
                arg_sum += zi.atan2(zr + j as f64);
            }
            let mut lp = Complex::with_val(p, prod.ln_ref());
            // Sum of principal logs differs from the principal log of the
            // product by a multiple of 2 pi i.
            let wraps = ((arg_sum - lp.imag().to_f64()) / TAU).round();
            if wraps != 0.0 {
                *lp.mut_imag() += Float::with_val(p, &self.two_pi * wraps);
            }
            out -= &lp;
        }
        Ok(out)
    }

    /// Gamma(z) itself (no branch bookkeeping needed).
    pub fn gamma(&self, z: &Complex) -> Result<Complex> {
        Self::check_pole(z)?;
        let p = self.prec;
        let n = self.shift_count(z);
        let w = self.shifted(z, n);
        let mut g = self.stirling_ln(&w);
        g.exp_mut();
        if n > 0 {
            let mut prod = Complex::with_val(p, (1, 0));
            for j in 0..n {
                prod *= Complex::with_val(p, z + j);
            }
            g /= &prod;
        }
        Ok(g)
    }

    /// 1/Gamma(z), entire; zero at the poles of Gamma.
    pub fn recip_gamma(&self, z: &Complex) -> Complex {
        match self.gamma(z) {
            Ok(g) => Complex::with_val(self.prec, g.recip_ref()),
            Err(_) => Complex::new(self.prec),
        }
    }

    /// psi^(order)(z) for order 0 (digamma), 1 (trigamma), 2.
    pub fn polygamma(&self, order: u32, z: &Complex) -> Result<Complex> {
        assert!(order <= 2, "polygamma order {order} not supported");
        Self::check_pole(z)?;
        let p = self.prec;
        let n = self.shift_count(z);
        let w = self.shifted(z, n);
        let inv = Complex::with_val(p, w.recip_ref());
        let inv2 = Complex::with_val(p, inv.square_ref());

        let mut acc = match order {
            0 => {
                let mut a = Complex::with_val(p, w.ln_ref());
                a -= Complex::with_val(p, &inv / 2u32);
                a
            }
            1 => {
                let mut a = inv.clone();
                a += Complex::with_val(p, &inv2 / 2u32);
                a
            }
            _ => {
                let mut a = Complex::with_val(p, -&inv2);
                a -= Complex::with_val(p, &inv2 * &inv);
                a
            }
        };
        // w^-(2k), w^-(2k+1), w^-(2k+2) starting at k = 1
        let mut pw = match order {
            0 => inv2.clone(),
            1 => Complex::with_val(p, &inv2 * &inv),
            _ => Complex::with_val(p, &inv2 * &inv2),
        };
        for (i, b) in self.bernoulli.iter().enumerate() {
            let k = (i + 1) as u32;
            let mut term = Complex::with_val(p, &pw * b);
            match order {
                0 => {
                    term /= 2 * k;
                    acc -= &term;
                }
                1 => acc += &term,
                _ => {
                    term *= 2 * k + 1;
                    acc -= &term;
                }
            }
            if negligible(&term, &acc, p) {
                break;
            }
            pw *= &inv2;
        }

        for j in 0..n {
            let f = Complex::with_val(p, z + j);
            let r = Complex::with_val(p, f.recip_ref());
            match order {
                0 => acc -= &r,
                1 => acc += Complex::with_val(p, r.square_ref()),
                _ => {
                    let r3 = Complex::with_val(p, r.square_ref()) * &r;
                    acc -= Complex::with_val(p, &r3 * 2u32);
                }
            }
        }
        Ok(acc)
    }

    pub fn digamma(&self, z: &Complex) -> Result<Complex> {
        self.polygamma(0, z)
    }
}

/// Binary exponent of |z| (approximate, `None` for zero).
pub(crate) fn log2_mag(z: &Complex) -> Option<i32> {
    match (z.real().get_exp(), z.imag().get_exp()) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    }
}

fn negligible(term: &Complex, acc: &Complex, prec: u32) -> bool {
    match (log2_mag(term), log2_mag(acc)) {
        (None, _) => true,
        (Some(t), Some(a)) => t < a - prec as i32 - 4,
        (Some(_), None) => false,
    }
}

/// Principal branch of log Gamma(z).
pub fn log_gamma(z: &Complex, ctx: &PrecCtx) -> Result<Complex> {
    GammaEngine::new(ctx).ln_gamma(z)
}

/// psi(z) = Gamma'(z)/Gamma(z).
pub fn digamma(z: &Complex, ctx: &PrecCtx) -> Result<Complex> {
    GammaEngine::new(ctx).digamma(z)
}
