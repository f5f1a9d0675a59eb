//! Quadrature of the Mellin-Barnes type integrals for `g` along two
//! horizontal lines `Im s = -1` and `Im s = +1`.

use rayon::prelude::*;
use rug::float::Constant;
use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::numerics::{GammaEngine, PrecCtx};
use crate::series::check_lambda;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContourForm {
    /// `g(z)` from `Gamma(s) lambda^{s(s+1)/2} z^{-s}`.
    Direct,
    /// `g(-z)` from `pi cot(pi s) lambda^{s(s+1)/2} z^{-s} / Gamma(1-s)`.
    Reflected,
}

struct Integrand<'a> {
    form: ContourForm,
    log_z: Complex,
    l: Float,
    gamma: &'a GammaEngine,
    prec: u32,
}

impl Integrand<'_> {
    fn log_value(&self, s: &Complex) -> Result<Complex> {
        let p = self.prec;
        let mut e = Complex::with_val(p, s + 1u32);
        e *= s;
        e *= &self.l;
        e /= 2u32;
        e -= Complex::with_val(p, s * &self.log_z);
        match self.form {
            ContourForm::Direct => e += self.gamma.ln_gamma(s)?,
            ContourForm::Reflected => {
                e -= self.gamma.ln_gamma(&Complex::with_val(p, 1 - s))?;
                let pi = Float::with_val(p, Constant::Pi);
                let ps = Complex::with_val(p, s * &pi);
                let mut cot = Complex::with_val(p, ps.tan_ref());
                cot.recip_mut();
                cot *= &pi;
                e += cot.ln();
            }
        }
        Ok(e)
    }

    /// `F(t - i) - F(t + i)`.
    fn jump(&self, t: &Float) -> Result<Complex> {
        let p = self.prec;
        let lo = Complex::with_val(p, (t, -1));
        let hi = Complex::with_val(p, (t, 1));
        let mut a = self.log_value(&lo)?;
        a.exp_mut();
        let mut b = self.log_value(&hi)?;
        b.exp_mut();
        Ok(a - b)
    }

    fn log_mag(&self, t: f64) -> f64 {
        let p = self.prec;
        [-1.0, 1.0]
            .iter()
            .map(|&c| {
                self.log_value(&Complex::with_val(p, (t, c)))
                    .map(|v| v.real().to_f64())
                    .unwrap_or(f64::NEG_INFINITY)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Interval outside of which the integrand is below `e^{-cut}` times its peak.
fn truncation_window(f: &Integrand, cut: f64) -> (f64, f64, f64) {
    let mut lo = -8.0f64;
    let mut hi = 8.0f64;
    loop {
        let samples: Vec<(f64, f64)> = {
            let n = (hi - lo) as usize;
            (0..=n).map(|j| lo + j as f64).map(|t| (t, f.log_mag(t))).collect()
        };
        let peak = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let left = samples.first().unwrap().1;
        let right = samples.last().unwrap().1;
        let mut grew = false;
        if left > peak - cut {
            lo *= 2.0;
            grew = true;
        }
        if right > peak - cut {
            hi *= 2.0;
            grew = true;
        }
        if !grew || hi - lo > 1e5 {
            // trim to the last sample above the cutoff on each side
            let first = samples.iter().position(|s| s.1 > peak - cut).unwrap_or(0);
            let last = samples.iter().rposition(|s| s.1 > peak - cut).unwrap_or(samples.len() - 1);
            let a = samples[first.saturating_sub(1)].0;
            let b = samples[(last + 1).min(samples.len() - 1)].0;
            return (a, b, peak);
        }
    }
}

const MAX_LEVELS: usize = 9;

fn trapezoid(f: &Integrand, a: f64, b: f64, target: f64) -> Result<Complex> {
    let p = f.prec;
    let mut n = ((b - a) * 2.0).ceil().max(8.0) as usize;
    let af = Float::with_val(p, a);
    let width = Float::with_val(p, b - a);
    let node = |j: usize, n: usize| -> Float {
        let mut t = Float::with_val(p, &width * j as u32);
        t /= n as u32;
        t += &af;
        t
    };
    let sum_nodes = |idx: Vec<usize>, n: usize| -> Result<Complex> {
        let vals: Vec<Complex> = idx.par_iter().map(|&j| f.jump(&node(j, n))).collect::<Result<_>>()?;
        let mut s = Complex::new(p);
        for v in vals {
            s += v;
        }
        Ok(s)
    };
    let mut raw = sum_nodes((0..=n).collect(), n)?;
    let mut h = Float::with_val(p, &width / n as u32);
    let mut est = Complex::with_val(p, &raw * &h);
    for _ in 0..MAX_LEVELS {
        let odd: Vec<usize> = (0..n).map(|j| 2 * j + 1).collect();
        n *= 2;
        raw += sum_nodes(odd, n)?;
        h /= 2u32;
        let next = Complex::with_val(p, &raw * &h);
        let diff = Float::with_val(p, Complex::with_val(p, &next - &est).abs_ref());
        let mag = Float::with_val(p, next.abs_ref());
        est = next;
        if diff <= Float::with_val(p, &mag * target) {
            return Ok(est);
        }
    }
    Err(Error::QuadratureNonConvergence(format!(
        "trapezoid sums on [{a}, {b}] still changing after {MAX_LEVELS} halvings"
    )))
}

/// `g(z)` (Direct) or `g(-z)` (Reflected) by trapezoidal quadrature on the
/// lines `Im s = -1, +1`, truncated where the Gaussian factor
/// `lambda^{s(s+1)/2}` has pushed the integrand below working precision.
pub fn hankel_contour_eval(z: &Complex, lambda: &Float, which: ContourForm, ctx: &PrecCtx) -> Result<Complex> {
    check_lambda(lambda)?;
    if z.is_zero() {
        return Err(Error::Domain("z = 0".into()));
    }
    let needed = (-ctx.target().log2()).ceil() as u32 + 8;
    let mut bits = ctx.bits();
    loop {
        let c = PrecCtx::new(bits, ctx.target())?;
        let gamma = GammaEngine::new(&c);
        let f = Integrand {
            form: which,
            log_z: Complex::with_val(bits, z.ln_ref()),
            l: Float::with_val(bits, lambda.ln_ref()),
            gamma: &gamma,
            prec: bits,
        };
        let cut = (bits as f64 + 20.0) * std::f64::consts::LN_2;
        let (a, b, peak) = truncation_window(&f, cut);
        let s = trapezoid(&f, a, b, ctx.target() * 1e-2)?;
        // divide by 2 pi i
        let two_pi = Float::with_val(bits, Constant::Pi) * 2u32;
        let mut v = Complex::with_val(bits, &s / &two_pi);
        v *= Complex::with_val(bits, (0, -1));
        let lost = ((peak - Float::with_val(bits, v.abs_ref()).ln().to_f64()) / std::f64::consts::LN_2).max(0.0) as u32;
        if lost + needed <= bits {
            return Ok(Complex::with_val(ctx.bits(), &v));
        }
        if bits >= PrecCtx::MAX_BITS {
            return Err(Error::PrecisionExhausted { bits, lost_bits: lost });
        }
        bits = (lost + needed + 32).max(bits + 64).min(PrecCtx::MAX_BITS);
    }
}
