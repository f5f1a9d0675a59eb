use rug::{Complex, Float};

use crate::error::Result;
use crate::numerics::PrecCtx;
use crate::series::deformed::check_lambda;

/// `Q_lambda(alpha) = prod_{k>=0} (1 + alpha lambda^k)`.
#[derive(Debug, Clone)]
pub struct QProduct {
    pub alpha: Complex,
    pub lambda: Float,
    pub value: Complex,
    /// Index of the last factor multiplied in.
    pub truncation_k: usize,
}

impl QProduct {
    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }
}

pub fn q_pochhammer(alpha: &Complex, lambda: &Float, ctx: &PrecCtx) -> Result<QProduct> {
    check_lambda(lambda)?;
    let p = ctx.bits();
    let lam = Float::with_val(p, lambda);
    let zero_tol = -(p as i32) + 8;
    let mut term = Complex::with_val(p, alpha);
    let mut value = Complex::with_val(p, (1, 0));
    let mut k = 0usize;
    loop {
        let factor = Complex::with_val(p, &term + 1u32);
        let tm = Float::with_val(p, term.abs_ref());
        // factor vanishing to within rounding: alpha lambda^k = -1
        let vanishes = factor.is_zero()
            || crate::numerics::log2_mag(&factor).is_some_and(|e| e < zero_tol);
        if vanishes {
            return Ok(QProduct {
                alpha: alpha.clone(),
                lambda: lam,
                value: Complex::new(p),
                truncation_k: k,
            });
        }
        value *= &factor;
        if tm.is_zero() || tm.get_exp().is_some_and(|e| e < -(p as i32)) {
            break;
        }
        term *= &lam;
        k += 1;
    }
    Ok(QProduct {
        alpha: alpha.clone(),
        lambda: lam,
        value,
        truncation_k: k,
    })
}

/// Coefficients `c_n = (-1)^n prod_{k=1}^n 1/(1 - lambda^k)` of `1/Q_lambda(alpha)`.
pub fn q_pochhammer_recip_coeffs(lambda: &Float, m_max: usize, ctx: &PrecCtx) -> Result<Vec<Float>> {
    check_lambda(lambda)?;
    let p = ctx.bits();
    let lam = Float::with_val(p, lambda);
    let mut pw = Float::with_val(p, 1);
    let mut c = Float::with_val(p, 1);
    let mut out = Vec::with_capacity(m_max + 1);
    out.push(c.clone());
    for _ in 1..=m_max {
        pw *= &lam;
        c /= Float::with_val(p, 1 - &pw);
        c = -c;
        out.push(c.clone());
    }
    Ok(out)
}

/// `prod_{k>=1} 1/(1 - lambda^k)`, the supremum of `|c_n|`.
pub fn recip_coeff_sup(lambda: &Float, ctx: &PrecCtx) -> Result<Float> {
    let p = ctx.bits();
    let minus_lam = Complex::with_val(p, (-Float::with_val(p, lambda), 0));
    let q = q_pochhammer(&minus_lam, lambda, ctx)?;
    Ok(Float::with_val(p, q.value.real().recip_ref()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_products() {
        let c = PrecCtx::default();
        let lam = c.real(0.5);
        assert_eq!(*q_pochhammer(&c.complex((0, 0)), &lam, &c).unwrap().value.real(), 1);
        assert!(q_pochhammer(&c.complex((-1, 0)), &lam, &c).unwrap().is_zero());
        // alpha lambda^3 = -1
        assert!(q_pochhammer(&c.complex((-8, 0)), &lam, &c).unwrap().is_zero());
        assert!(!q_pochhammer(&c.complex((-8.001, 0)), &lam, &c).unwrap().is_zero());
    }

    #[test]
    fn product_at_alpha_one_against_direct() {
        let c = PrecCtx::default();
        let hi = PrecCtx::with_bits(512).unwrap();
        let l = hi.real(0.6);
        let mut direct = hi.real(1);
        let mut pw = hi.real(1);
        for _ in 0..200 {
            direct *= Float::with_val(512, &pw + 1u32);
            pw *= &l;
        }
        let q = q_pochhammer(&c.complex((1, 0)), &c.real(0.6), &c).unwrap();
        let d = Float::with_val(512, q.value.real() - &direct).abs();
        // the 200-factor oracle itself is truncated at 0.6^200 ~ 1e-44
        assert!(d.to_f64() < 1e-40 * direct.to_f64());
    }

    #[test]
    fn reciprocal_series_inverts_product() {
        let c = PrecCtx::default();
        let lam = c.real(0.5);
        let coeffs = q_pochhammer_recip_coeffs(&lam, 400, &c).unwrap();
        assert_eq!(coeffs[0], 1);
        assert_eq!(coeffs[1], -2);
        let alpha = c.real(0.3);
        let mut s = c.real(0);
        let mut pw = c.real(1);
        for cn in &coeffs {
            s += Float::with_val(256, cn * &pw);
            pw *= &alpha;
        }
        let q = q_pochhammer(&c.complex((0.3, 0)), &lam, &c).unwrap();
        let prod = Float::with_val(256, &s * q.value.real());
        assert!((prod.to_f64() - 1.0).abs() < 1e-25);
    }
}
