use rug::Float;

use crate::error::{Error, Result};
use crate::numerics::PrecCtx;

/// `sum_{k>=1} sigma(k) q^-k` with `sigma` the sum of divisors.
#[derive(Debug, Clone)]
pub struct DivisorGF {
    pub q: Float,
    pub value: Float,
    pub terms: usize,
    /// Bound on the omitted tail, from `sigma(k) <= k^2`.
    pub tail_bound: Float,
}

pub fn sigma(k: u64) -> u64 {
    let mut s = 0;
    let mut d = 1;
    while d * d <= k {
        if k % d == 0 {
            s += d;
            if d * d != k {
                s += k / d;
            }
        }
        d += 1;
    }
    s
}

pub fn divisor_gf(q: &Float, ctx: &PrecCtx) -> Result<DivisorGF> {
    if !(*q > 1) {
        return Err(Error::Divergent(q.to_f64()));
    }
    let p = ctx.bits();
    let r = Float::with_val(p, q.recip_ref());
    let mut pw = Float::with_val(p, &r);
    let mut sum = Float::new(p);
    for k in 1u64..10_000_000 {
        sum += Float::with_val(p, &pw * sigma(k));
        // sum_{j>k} j^2 r^j <= (k+1)^2 r^(k+1) / (1 - r (1 + 1/(k+1))^2)
        let next = Float::with_val(p, &pw * &r);
        let g = Float::with_val(p, &r * ((k + 2) as f64 / (k + 1) as f64).powi(2));
        if g < 1 {
            let mut tail = Float::with_val(p, &next * ((k + 1) * (k + 1)));
            tail /= Float::with_val(p, 1 - &g);
            if tail <= Float::with_val(p, &sum * ctx.target()) * 1e-2f64 {
                return Ok(DivisorGF {
                    q: Float::with_val(p, q),
                    value: sum,
                    terms: k as usize,
                    tail_bound: tail,
                });
            }
        }
        pw = next;
    }
    Err(Error::NonConvergence {
        what: "divisor generating function",
        iterations: 10_000_000,
        last: format!("{:e}", sum.to_f64()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Rational;

    #[test]
    fn sigma_values() {
        let s: Vec<u64> = (1..=6).map(sigma).collect();
        assert_eq!(s, vec![1, 3, 4, 7, 6, 12]);
    }

    #[test]
    fn q_two_against_exact_rational_partial_sum() {
        let c = PrecCtx::default();
        let v = divisor_gf(&c.real(2), &c).unwrap();
        let mut exact = Rational::new();
        for k in 1..=64u32 {
            exact += Rational::from((sigma(k as u64), 1)) >> k;
        }
        // terms beyond 64 are below sum_{j>64} j^2 2^-j < 2^-51
        let d = Float::with_val(256, &v.value - &exact).abs().to_f64();
        assert!(d < 2f64.powi(-51), "{d:e}");
        assert!(v.tail_bound.to_f64() < 1e-31 * v.value.to_f64());
    }

    #[test]
    fn large_q_leading_term_and_divergence() {
        let c = PrecCtx::default();
        let v = divisor_gf(&c.real(1e6), &c).unwrap();
        assert!((v.value.to_f64() * 1e6 - 1.0).abs() < 1e-5);
        assert!(matches!(divisor_gf(&c.real(1), &c), Err(Error::Divergent(_))));
        assert!(matches!(divisor_gf(&c.real(0.5), &c), Err(Error::Divergent(_))));
    }
}
