//! Chebyshev interpolants on an interval, with exact differentiation and
//! integration in coefficient space.
//!
//! Convention: `f(x) = sum_k c_k T_k(t)`, `t = (2x - lo - hi)/(hi - lo)`, with
//! `c_0` the plain constant term (not halved).

use nalgebra::DMatrix;
use rayon::prelude::*;
use rug::float::Constant;
use rug::Float;

use crate::error::{Error, Result};
use crate::numerics::{PrecCtx, Scalar};

#[derive(Debug, Clone)]
pub struct ChebInterpolant<T: Scalar> {
    lo: Float,
    hi: Float,
    coeffs: Vec<T>,
    tail_bound: Float,
}

impl<T: Scalar> ChebInterpolant<T> {
    /// Build from coefficients; the tail bound is estimated from the trailing terms.
    pub fn from_coeffs(lo: Float, hi: Float, coeffs: Vec<T>) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "interval [{}, {}] is empty",
                lo.to_f64(),
                hi.to_f64()
            )));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("no coefficients".into()));
        }
        let tail_bound = estimate_tail(&coeffs);
        Ok(Self {
            lo,
            hi,
            coeffs,
            tail_bound,
        })
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn tail_bound(&self) -> &Float {
        &self.tail_bound
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec()
    }

    /// Replace the tail bound, e.g. to add propagated error.
    pub fn set_tail_bound(&mut self, b: Float) {
        self.tail_bound = b;
    }

    fn to_unit(&self, x: &Float) -> Float {
        let p = self.prec();
        let mut t = Float::with_val(p, x * 2u32);
        t -= &self.lo;
        t -= &self.hi;
        t /= Float::with_val(p, &self.hi - &self.lo);
        t
    }

    /// Clenshaw evaluation at `x`.
    pub fn eval(&self, x: &Float) -> T {
        let t = self.to_unit(x);
        clenshaw(&self.coeffs, &t)
    }

    /// Value at the unit-interval coordinate `t` in [-1, 1].
    pub fn eval_unit(&self, t: &Float) -> T {
        clenshaw(&self.coeffs, t)
    }

    /// Sum of |c_k|: bounds the interpolant on the interval.
    pub fn scale_bound(&self) -> Float {
        let mut s = Float::new(self.prec());
        for c in &self.coeffs {
            s += c.magnitude();
        }
        s
    }

    pub fn derivative(&self) -> Self {
        let p = self.prec();
        let n = self.coeffs.len();
        if n == 1 {
            return Self {
                lo: self.lo.clone(),
                hi: self.hi.clone(),
                coeffs: vec![T::zero(p)],
                tail_bound: Float::new(p),
            };
        }
        // d_{k-1} = d_{k+1} + 2k c_k, then d_0 halved.
        let mut d = vec![T::zero(p); n + 1];
        for k in (1..n).rev() {
            let two_k = Float::with_val(p, 2 * k as u32);
            d[k - 1] = d[k + 1].add(&self.coeffs[k].mul_real(&two_k));
        }
        d[0] = d[0].mul_real(&Float::with_val(p, 0.5f64));
        d.truncate(n - 1);
        let scale = Float::with_val(p, 2u32) / Float::with_val(p, &self.hi - &self.lo);
        let coeffs: Vec<T> = d.iter().map(|c| c.mul_real(&scale)).collect();
        let mut tb = Float::with_val(p, &self.tail_bound * &scale);
        tb *= (n * n) as u32;
        Self {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            coeffs,
            tail_bound: tb,
        }
    }

    /// Antiderivative vanishing at `lo`.
    pub fn antiderivative(&self) -> Self {
        let p = self.prec();
        let n = self.coeffs.len();
        let zero = T::zero(p);
        let c = |k: usize| -> &T { self.coeffs.get(k).unwrap_or(&zero) };
        let half_width = Float::with_val(p, &self.hi - &self.lo) / 2u32;
        let mut out = vec![T::zero(p); n + 1];
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            let num = if k == 1 {
                c(0).mul_real(&Float::with_val(p, 2u32)).sub(c(2))
            } else {
                c(k - 1).sub(c(k + 1))
            };
            let f = Float::with_val(p, &half_width / (2 * k as u32));
            *slot = num.mul_real(&f);
        }
        // value at t = -1 is sum (-1)^k C_k
        let mut at_lo = T::zero(p);
        for (k, ck) in out.iter().enumerate().skip(1) {
            at_lo = if k % 2 == 0 { at_lo.add(ck) } else { at_lo.sub(ck) };
        }
        out[0] = at_lo.neg();
        let mut tb = Float::with_val(p, &self.tail_bound * &half_width);
        tb *= 2u32;
        let mut r = Self {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            coeffs: out,
            tail_bound: Float::new(p),
        };
        r.set_tail_bound(tb);
        r
    }

    /// Drop trailing coefficients whose combined size is below `tol`
    /// (absolute); the dropped mass is added to the tail bound.
    pub fn trim(&mut self, tol: &Float) {
        let p = self.prec();
        let mut dropped = Float::new(p);
        while self.coeffs.len() > 1 {
            let m = self.coeffs.last().unwrap().magnitude();
            let next = Float::with_val(p, &dropped + &m);
            if next > *tol {
                break;
            }
            dropped = next;
            self.coeffs.pop();
        }
        let tb = Float::with_val(p, &self.tail_bound + &dropped);
        self.set_tail_bound(tb);
    }

    /// Pointwise product on the same interval, from `T_m T_n = (T_{m+n} + T_{|m-n|}) / 2`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.lo != other.lo || self.hi != other.hi {
            return Err(Error::InvalidParameter("product of interpolants on different intervals".into()));
        }
        let p = self.prec();
        let mut coeffs = vec![T::zero(p); self.coeffs.len() + other.coeffs.len() - 1];
        for (m, a) in self.coeffs.iter().enumerate() {
            for (n, b) in other.coeffs.iter().enumerate() {
                let half = a.mul(b).mul_real(&Float::with_val(p, 0.5));
                coeffs[m + n] = coeffs[m + n].add(&half);
                let d = m.abs_diff(n);
                coeffs[d] = coeffs[d].add(&half);
            }
        }
        let mut tail = Float::with_val(p, self.scale_bound() * &other.tail_bound);
        tail += Float::with_val(p, other.scale_bound() * &self.tail_bound);
        tail += Float::with_val(p, &self.tail_bound * &other.tail_bound);
        Ok(Self {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            coeffs,
            tail_bound: tail,
        })
    }

    /// Multiply every coefficient by a real factor.
    pub fn scaled(&self, f: &Float) -> Self {
        let p = self.prec();
        Self {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            coeffs: self.coeffs.iter().map(|c| c.mul_real(f)).collect(),
            tail_bound: Float::with_val(p, &self.tail_bound * &*f.as_abs()),
        }
    }
}

impl ChebInterpolant<Float> {
    /// Real roots in [lo, hi] of the interpolant, located in double precision
    /// through the eigenvalues of the colleague matrix. Candidates only:
    /// callers confirm and refine them at working precision.
    pub fn root_candidates(&self) -> Vec<f64> {
        let mut c: Vec<f64> = {
            let scale = self
                .coeffs
                .iter()
                .map(|c| c.clone().abs())
                .max_by(|a, b| a.partial_cmp(b).unwrap())
                .unwrap();
            if scale.is_zero() {
                return Vec::new();
            }
            self.coeffs
                .iter()
                .map(|x| Float::with_val(53, x / &scale).to_f64())
                .collect()
        };
        while c.len() > 1 && c.last().unwrap().abs() < 1e-15 {
            c.pop();
        }
        let n = c.len() - 1;
        if n == 0 {
            return Vec::new();
        }
        let mut roots_t = if n == 1 {
            vec![-c[0] / c[1]]
        } else {
            let mut m = DMatrix::<f64>::zeros(n, n);
            m[(0, 1)] = 1.0;
            for k in 1..n {
                m[(k, k - 1)] = 0.5;
                if k + 1 < n {
                    m[(k, k + 1)] = 0.5;
                }
            }
            for (j, cj) in c.iter().take(n).enumerate() {
                m[(n - 1, j)] -= cj / (2.0 * c[n]);
            }
            balance(&mut m);
            m.complex_eigenvalues()
                .iter()
                .filter(|z| z.im.abs() < 1e-6 && z.re.abs() <= 1.0 + 1e-9)
                .map(|z| z.re.clamp(-1.0, 1.0))
                .collect::<Vec<_>>()
        };
        roots_t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lo = self.lo.to_f64();
        let hi = self.hi.to_f64();
        roots_t
            .into_iter()
            .filter(|t| t.abs() <= 1.0)
            .map(|t| 0.5 * (lo + hi) + 0.5 * (hi - lo) * t)
            .collect()
    }
}

/// Parlett-Reinsch diagonal balancing; nalgebra's Schur solver does not
/// balance and the colleague matrix's last row can be badly scaled.
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let radix = 2f64;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            let mut rr = r;
            while cc < rr / radix {
                f *= radix;
                cc *= radix;
                rr /= radix;
            }
            while cc > rr * radix {
                f /= radix;
                cc /= radix;
                rr *= radix;
            }
            if (cc + rr) < 0.95 * s {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

fn clenshaw<T: Scalar>(c: &[T], t: &Float) -> T {
    let p = t.prec();
    let two_t = Float::with_val(p, t * 2u32);
    let mut b1 = T::zero(p);
    let mut b2 = T::zero(p);
    for ck in c.iter().skip(1).rev() {
        let b0 = b1.mul_real(&two_t).sub(&b2).add(ck);
        b2 = b1;
        b1 = b0;
    }
    c[0].add(&b1.mul_real(t)).sub(&b2)
}

fn estimate_tail<T: Scalar>(c: &[T]) -> Float {
    let p = c[0].prec();
    let n = c.len();
    let mut tb = c[n - 1].magnitude();
    if n >= 2 {
        tb += c[n - 2].magnitude();
    }
    // rounding floor: n ulps of the largest coefficient
    let mut big = Float::new(p);
    for x in c {
        let m = x.magnitude();
        if m > big {
            big = m;
        }
    }
    big *= Float::with_val(p, Float::u_exp(n as u32, -(p as i32)));
    tb += big;
    tb
}

/// Chebyshev nodes of the first kind mapped to [lo, hi], with the cosine
/// table used by `cheb_fit`.
fn nodes(lo: &Float, hi: &Float, degree: usize) -> (Vec<Float>, Vec<Float>) {
    let p = lo.prec();
    let n1 = degree + 1;
    // cos(pi m / (2 n1)) for m in 0..4 n1
    let pi = Float::with_val(p, Constant::Pi);
    let table: Vec<Float> = (0..4 * n1)
        .map(|m| {
            let mut a = Float::with_val(p, &pi * m as u32);
            a /= 2 * n1 as u32;
            a.cos()
        })
        .collect();
    let mid = Float::with_val(p, lo + hi) / 2u32;
    let half = Float::with_val(p, hi - lo) / 2u32;
    let xs = (0..n1)
        .map(|j| {
            let t = &table[2 * j + 1];
            let mut x = Float::with_val(p, &half * t);
            x += &mid;
            x
        })
        .collect();
    (xs, table)
}

/// Interpolate `f` at `degree + 1` Chebyshev points of [lo, hi].
pub fn cheb_fit<T, F>(f: F, lo: &Float, hi: &Float, degree: usize, ctx: &PrecCtx) -> Result<ChebInterpolant<T>>
where
    T: Scalar,
    F: Fn(&Float) -> Result<T> + Sync,
{
    if degree < 1 {
        return Err(Error::InvalidParameter("degree must be >= 1".into()));
    }
    let p = ctx.bits();
    let lo = Float::with_val(p, lo);
    let hi = Float::with_val(p, hi);
    if !(lo < hi) {
        return Err(Error::InvalidParameter("empty interval".into()));
    }
    let (xs, table) = nodes(&lo, &hi, degree);
    let vals: Vec<T> = xs.par_iter().map(&f).collect::<Result<Vec<T>>>()?;
    for (x, v) in xs.iter().zip(&vals) {
        if !v.is_finite() {
            return Err(Error::NonFiniteSample { x: x.to_f64() });
        }
    }
    Ok(coeffs_from_values(lo, hi, &vals, &table))
}

fn coeffs_from_values<T: Scalar>(lo: Float, hi: Float, vals: &[T], table: &[Float]) -> ChebInterpolant<T> {
    let p = lo.prec();
    let n1 = vals.len();
    let period = 4 * n1;
    // node j sits at t_j = cos(pi (2j+1)/(2 n1)), i.e. x_j in increasing-cos order
    let coeffs: Vec<T> = (0..n1)
        .into_par_iter()
        .map(|k| {
            let mut s = T::zero(p);
            for (j, v) in vals.iter().enumerate() {
                let m = (k * (2 * j + 1)) % period;
                s = s.add(&v.mul_real(&table[m]));
            }
            let w = if k == 0 { 1u32 } else { 2u32 };
            s.mul_real(&(Float::with_val(p, w) / n1 as u32))
        })
        .collect();
    ChebInterpolant::from_coeffs(lo, hi, coeffs).expect("validated interval")
}

/// Fit with degree doubling until the trailing coefficients fall below
/// `abs_tol`, then trim. Returns `Ok(None)` if `max_degree` is not enough.
pub fn cheb_fit_adaptive<T, F>(
    f: F,
    lo: &Float,
    hi: &Float,
    abs_tol: &Float,
    max_degree: usize,
    ctx: &PrecCtx,
) -> Result<Option<ChebInterpolant<T>>>
where
    T: Scalar,
    F: Fn(&Float) -> Result<T> + Sync,
{
    let mut degree = 16.min(max_degree);
    loop {
        let mut fit = cheb_fit(&f, lo, hi, degree, ctx)?;
        let n = fit.coeffs.len();
        let mut trailing = Float::new(ctx.bits());
        for c in &fit.coeffs[n - 3.min(n)..] {
            trailing += c.magnitude();
        }
        if trailing <= *abs_tol {
            fit.trim(abs_tol);
            return Ok(Some(fit));
        }
        if degree >= max_degree {
            return Ok(None);
        }
        degree = (degree * 2).min(max_degree);
    }
}
