use rug::Float;

use crate::error::{Error, Result};
use crate::numerics::PrecCtx;

/// A refined simple root and the width of the final sign-change bracket.
#[derive(Debug, Clone)]
pub struct RootEnclosure {
    pub root: Float,
    pub width: Float,
}

type RealFn<'a> = &'a (dyn Fn(&Float) -> Result<Float> + Sync);

/// Bisection until the bracket is small, then safeguarded Newton.
///
/// Newton iterates that leave the bracket, or fail to halve it within two
/// steps, fall back to bisection. Once a Newton correction is below the
/// tolerance the root is closed in by probing both sides.
pub fn refine_root(f: RealFn, df: Option<RealFn>, lo: &Float, hi: &Float, ctx: &PrecCtx) -> Result<RootEnclosure> {
    let p = ctx.bits();
    let mut a = Float::with_val(p, lo);
    let mut b = Float::with_val(p, hi);
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    let mut fa = f(&a)?;
    let fb = f(&b)?;
    if fa.is_zero() {
        return Ok(RootEnclosure { root: a, width: Float::new(p) });
    }
    if fb.is_zero() {
        return Ok(RootEnclosure { root: b, width: Float::new(p) });
    }
    if fa.is_sign_negative() == fb.is_sign_negative() {
        return Err(Error::NoSignChange {
            lo: a.to_f64(),
            hi: b.to_f64(),
        });
    }

    let rel = ctx.target().max(2f64.powi(4 - p as i32));
    let floor = {
        let mut m = Float::with_val(p, a.abs_ref()).max(&Float::with_val(p, b.abs_ref()));
        m *= Float::with_val(p, Float::u_exp(1, 4 - p as i32));
        m
    };
    let tol_at = |x: &Float| -> Float {
        let t = Float::with_val(p, x.abs_ref()) * rel;
        if t < floor {
            floor.clone()
        } else {
            t
        }
    };

    let initial = Float::with_val(p, &b - &a);
    let mut last_width = initial.clone();
    let mut newton_strikes = 0;
    let mut best: Option<(Float, Float)> = None;

    for iter in 0..(8 * p as usize) {
        let width = Float::with_val(p, &b - &a);
        let mid = Float::with_val(p, &a + &b) / 2u32;
        let tol = tol_at(&mid);
        if width <= tol {
            return Ok(RootEnclosure { root: mid, width });
        }

        let bisect_phase = df.is_none() || iter < 6 || newton_strikes >= 2 || width > Float::with_val(p, &initial / 8u32);
        let mut x = mid.clone();
        if !bisect_phase {
            let (xb, fxb) = best.clone().expect("bisection phase records a best point");
            let d = df.unwrap()(&xb)?;
            if !d.is_zero() && d.is_finite() {
                let step = Float::with_val(p, &fxb / &d);
                let cand = Float::with_val(p, &xb - &step);
                if cand > a && cand < b {
                    if Float::with_val(p, step.abs_ref()) < Float::with_val(p, &tol / 2u32) {
                        let h = Float::with_val(p, &tol / 2u32);
                        let l = Float::with_val(p, &cand - &h).max(&a);
                        let r = Float::with_val(p, &cand + &h).min(&b);
                        let fl = f(&l)?;
                        let fr = f(&r)?;
                        if fl.is_zero() {
                            return Ok(RootEnclosure { root: l, width: Float::new(p) });
                        }
                        if fr.is_zero() {
                            return Ok(RootEnclosure { root: r, width: Float::new(p) });
                        }
                        if fl.is_sign_negative() != fr.is_sign_negative() {
                            let w = Float::with_val(p, &r - &l);
                            return Ok(RootEnclosure { root: cand, width: w });
                        }
                        // tolerance probe missed: shrink with what we learned
                        if fl.is_sign_negative() == fa.is_sign_negative() {
                            a = r;
                            fa = fr;
                        } else {
                            b = l;
                        }
                        newton_strikes += 1;
                        continue;
                    }
                    x = cand;
                }
            }
        }

        let fx = f(&x)?;
        if fx.is_zero() {
            return Ok(RootEnclosure { root: x, width: Float::new(p) });
        }
        if fx.is_sign_negative() == fa.is_sign_negative() {
            a = x.clone();
            fa = fx.clone();
        } else {
            b = x.clone();
        }
        let better = match &best {
            None => true,
            Some((_, fb)) => Float::with_val(p, fx.abs_ref()) < Float::with_val(p, fb.abs_ref()),
        };
        if better || !bisect_phase {
            best = Some((x, fx));
        }
        if !bisect_phase {
            let w = Float::with_val(p, &b - &a);
            if w > Float::with_val(p, &last_width / 2u32) {
                newton_strikes += 1;
            } else {
                newton_strikes = 0;
            }
            last_width = w;
        } else {
            last_width = Float::with_val(p, &b - &a);
            newton_strikes = 0;
        }
    }
    Err(Error::NonConvergence {
        what: "refine_root",
        iterations: 8 * p as usize,
        last: format!("[{}, {}]", a.to_f64(), b.to_f64()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::float::Constant;

    #[test]
    fn sqrt_two() {
        let c = PrecCtx::default();
        let f = |x: &Float| Ok(Float::with_val(256, x * x) - 2u32);
        let df = |x: &Float| Ok(Float::with_val(256, x * 2u32));
        let r = refine_root(&f, Some(&df), &c.real(1), &c.real(2), &c).unwrap();
        let s = c.real(2).sqrt();
        assert!(Float::with_val(256, &r.root - &s).abs().to_f64() < 1e-29);
        assert!(r.width.to_f64() <= 1e-30 * 1.5);
    }

    #[test]
    fn cos_half_pi_with_and_without_derivative() {
        let c = PrecCtx::default();
        let f = |x: &Float| Ok(Float::with_val(256, x.cos_ref()));
        let df = |x: &Float| Ok(-Float::with_val(256, x.sin_ref()));
        let half_pi = Float::with_val(256, Constant::Pi) / 2u32;
        for r in [
            refine_root(&f, Some(&df), &c.real(1), &c.real(2), &c).unwrap(),
            refine_root(&f, None, &c.real(1), &c.real(2), &c).unwrap(),
        ] {
            assert!(Float::with_val(256, &r.root - &half_pi).abs().to_f64() < 2e-30);
        }
    }

    #[test]
    fn no_sign_change() {
        let c = PrecCtx::default();
        let f = |x: &Float| Ok(Float::with_val(256, x * x) + 1u32);
        assert!(matches!(
            refine_root(&f, None, &c.real(-1), &c.real(1), &c),
            Err(Error::NoSignChange { .. })
        ));
    }
}
