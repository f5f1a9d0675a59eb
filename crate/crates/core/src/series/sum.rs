use rug::Float;

use crate::error::{Error, Result};
use crate::numerics::{PrecCtx, Scalar};

/// Raw result of summing a power series term by term.
#[derive(Debug, Clone)]
pub struct PowerSum<T: Scalar> {
    pub value: T,
    /// Term-wise differentiated series, if requested.
    pub deriv: Option<T>,
    pub deriv_err: Option<Float>,
    /// Bound on omitted terms plus accumulated rounding.
    pub abs_err: Float,
    pub terms: usize,
    /// Largest |term| met; `max_term / |value|` measures cancellation.
    pub max_term: Float,
}

impl<T: Scalar> PowerSum<T> {
    /// Bits lost to cancellation (0 when there is none).
    pub fn lost_bits(&self) -> u32 {
        let v = self.value.magnitude();
        match (self.max_term.get_exp(), v.get_exp()) {
            (Some(m), Some(v)) => (m - v).max(0) as u32,
            (Some(_), None) => self.value.prec(),
            _ => 0,
        }
    }

    /// Fail unless the absolute error is within `target * |value|`.
    pub fn require_relative(&self, ctx: &PrecCtx) -> Result<()> {
        let lim = Float::with_val(self.value.prec(), self.value.magnitude() * ctx.target());
        if self.abs_err <= lim {
            Ok(())
        } else {
            Err(Error::PrecisionExhausted {
                bits: self.value.prec(),
                lost_bits: self.lost_bits(),
            })
        }
    }
}

const MAX_TERMS: usize = 200_000;

/// Sums `sum_n s_n` with `s_0 = 1`, `s_{n+1} = s_n z r_n`.
///
/// `ratio(n)` returns `r_n` together with `rho_n >= sup_{m >= n} |r_m|`; once
/// `|z| rho_n < 1/2` the remainder is majorised by a geometric series. The
/// derivative of `sum f_n z^n` uses `(n+1) f_{n+1} z^n = (n+1) s_n r_n`.
pub fn sum_power_series<T, R>(z: &T, mut ratio: R, want_deriv: bool, prec: u32) -> Result<PowerSum<T>>
where
    T: Scalar,
    R: FnMut(usize) -> (T, Float),
{
    let zabs = z.magnitude();
    let mut s = T::from_real(&Float::with_val(prec, 1));
    let mut sum = T::zero(prec);
    let mut dsum = T::zero(prec);
    let mut max_term = Float::with_val(prec, 1);
    let two_prec = -2 * prec as i32;

    for n in 0..MAX_TERMS {
        sum = sum.add(&s);
        let sm = s.magnitude();
        if sm > max_term {
            max_term = sm.clone();
        }
        let (r, rho) = ratio(n);
        if want_deriv {
            let d = s.mul(&r).mul_real(&Float::with_val(prec, n + 1));
            dsum = dsum.add(&d);
        }
        let qn = Float::with_val(prec, &zabs * &rho);
        if qn < 0.5f64 {
            // sum_{j>=1} qn^j |s_n|
            let one_minus = Float::with_val(prec, 1 - &qn);
            let mut tail = Float::with_val(prec, &sm * &qn);
            tail /= &one_minus;
            // derivative remainder: sum_{j>=1} (n+j+1) qn^j rho |s_n|
            let mut dtail = Float::with_val(prec, &tail * &rho);
            dtail *= (n + 2) as u32;
            dtail /= &one_minus;
            let small = |t: &Float, v: &Float| {
                t.is_zero()
                    || t.get_exp().zip(v.get_exp()).is_some_and(|(t, v)| t < v - prec as i32 - 2)
                    || t.get_exp().zip(max_term.get_exp()).is_some_and(|(t, m)| t < m + two_prec)
            };
            let done = (small(&tail, &sum.magnitude()) && (!want_deriv || small(&dtail, &dsum.magnitude())))
                || sm.is_zero();
            if done {
                let mut round = Float::with_val(prec, Float::u_exp((n + 1) as u32, -(prec as i32)));
                round *= &max_term;
                let err = Float::with_val(prec, &tail + &round);
                let derr = want_deriv.then(|| {
                    let mut d = Float::with_val(prec, &round * (n + 1) as u32);
                    d *= rho.clone().max(&Float::with_val(prec, 1));
                    d + &dtail
                });
                return Ok(PowerSum {
                    value: sum,
                    deriv: want_deriv.then_some(dsum),
                    deriv_err: derr,
                    abs_err: err,
                    terms: n + 1,
                    max_term,
                });
            }
        }
        s = s.mul(z).mul(&r);
        if !s.is_finite() {
            return Err(Error::PrecisionExhausted { bits: prec, lost_bits: prec });
        }
    }
    Err(Error::NonConvergence {
        what: "power series",
        iterations: MAX_TERMS,
        last: format!("{:e}", sum.magnitude().to_f64()),
    })
}

/// Re-run `f` at higher precision until the result passes the relative
/// accuracy check, up to `PrecCtx::MAX_BITS`.
pub fn with_precision_retry<V, F>(ctx: &PrecCtx, mut f: F) -> Result<V>
where
    F: FnMut(&PrecCtx) -> Result<V>,
{
    let mut c = *ctx;
    loop {
        match f(&c) {
            Err(Error::PrecisionExhausted { lost_bits, .. }) if c.bits() < PrecCtx::MAX_BITS => {
                let want = (c.bits() + lost_bits + 32).max(c.bits() * 3 / 2);
                c = PrecCtx::new(want.min(PrecCtx::MAX_BITS), c.target())?;
            }
            other => return other,
        }
    }
}
