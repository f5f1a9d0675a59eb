use rug::ops::Pow;
use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::numerics::{log2_mag, PrecCtx};
use crate::series::deformed::{check_lambda, deformed_exp_eval};
use crate::series::qprod::{q_pochhammer, recip_coeff_sup};
use crate::series::sum::{sum_power_series, PowerSum};
use crate::series::SeriesTail;

/// Parameters of `y'(z) = a y(lambda z) + b y(z)`.
#[derive(Debug, Clone)]
pub struct PantographParams {
    lambda: Float,
    a: Complex,
    b: Complex,
    q: Float,
}

impl PantographParams {
    pub fn new(lambda: &Float, a: &Complex, b: &Complex, ctx: &PrecCtx) -> Result<Self> {
        check_lambda(lambda)?;
        let p = ctx.bits();
        let lambda = Float::with_val(p, lambda);
        let q = Float::with_val(p, lambda.recip_ref());
        Ok(Self {
            lambda,
            a: Complex::with_val(p, a),
            b: Complex::with_val(p, b),
            q,
        })
    }

    /// Real coefficients given as doubles.
    pub fn real(lambda: f64, a: f64, b: f64, ctx: &PrecCtx) -> Result<Self> {
        Self::new(&ctx.real(lambda), &ctx.complex((a, 0)), &ctx.complex((b, 0)), ctx)
    }

    pub fn lambda(&self) -> &Float {
        &self.lambda
    }
    pub fn a(&self) -> &Complex {
        &self.a
    }
    pub fn b(&self) -> &Complex {
        &self.b
    }
    pub fn q(&self) -> &Float {
        &self.q
    }
    pub fn prec(&self) -> u32 {
        self.lambda.prec()
    }
    /// Both coefficients real, so real initial data gives real solutions.
    pub fn is_real(&self) -> bool {
        self.a.imag().is_zero() && self.b.imag().is_zero()
    }
}

/// Parameters of `f'(z) = sum_k a_k f(lambda_k z) + b f(z)`.
#[derive(Debug, Clone)]
pub struct MultiPantographParams {
    lambdas: Vec<Float>,
    a: Vec<Complex>,
    b: Complex,
}

impl MultiPantographParams {
    /// `lambdas` in index order `lambda_1 < ... < lambda_l`, all in (0, 1).
    pub fn new(lambdas: &[Float], a: &[Complex], b: &Complex, ctx: &PrecCtx) -> Result<Self> {
        if lambdas.is_empty() || lambdas.len() != a.len() {
            return Err(Error::InvalidParameter(
                "lambdas and a must be non-empty lists of equal length".into(),
            ));
        }
        for l in lambdas {
            check_lambda(l)?;
        }
        if lambdas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("lambdas must be strictly increasing".into()));
        }
        let p = ctx.bits();
        Ok(Self {
            lambdas: lambdas.iter().map(|l| Float::with_val(p, l)).collect(),
            a: a.iter().map(|x| Complex::with_val(p, x)).collect(),
            b: Complex::with_val(p, b),
        })
    }

    pub fn lambdas(&self) -> &[Float] {
        &self.lambdas
    }
    pub fn a(&self) -> &[Complex] {
        &self.a
    }
    pub fn b(&self) -> &Complex {
        &self.b
    }
}

/// Taylor coefficient `f_n` of the entire solution with `f_0 = 1`.
pub fn pantograph_coeff(params: &PantographParams, n: u32, ctx: &PrecCtx) -> Result<Complex> {
    if params.b.is_zero() {
        return Err(Error::RescaleToDeformedExp);
    }
    let p = ctx.bits();
    let mut f = Complex::with_val(p, (1, 0));
    let mut pw = Float::with_val(p, 1);
    for k in 0..n {
        let mut r = Complex::with_val(p, &params.a * &pw);
        r += &params.b;
        r /= k + 1;
        f *= &r;
        pw *= &params.lambda;
    }
    Ok(f)
}

/// Power series `sum f_n z^n` via `(n+1) f_{n+1} = (a lambda^n + b) f_n`.
pub fn pantograph_sum(params: &PantographParams, z: &Complex, want_deriv: bool, prec: u32) -> Result<PowerSum<Complex>> {
    let lam = Float::with_val(prec, &params.lambda);
    let a = Complex::with_val(prec, &params.a);
    let b = Complex::with_val(prec, &params.b);
    let a_abs = Float::with_val(prec, a.abs_ref());
    let b_abs = Float::with_val(prec, b.abs_ref());
    let mut pw = Float::with_val(prec, 1);
    sum_power_series(
        z,
        move |n| {
            let mut r = Complex::with_val(prec, &a * &pw);
            r += &b;
            r /= (n + 1) as u32;
            let mut rho = Float::with_val(prec, &a_abs * &pw);
            rho += &b_abs;
            rho /= (n + 1) as u32;
            pw *= &lam;
            (r, rho)
        },
        want_deriv,
        prec,
    )
}

/// Direct summation of the Taylor series. `b = 0` is evaluated as `g(-a z)`.
pub fn pantograph_eval_direct(params: &PantographParams, z: &Complex, ctx: &PrecCtx) -> Result<SeriesTail> {
    if params.b.is_zero() {
        let w = -Complex::with_val(ctx.bits(), &params.a * z);
        return deformed_exp_eval(&params.lambda, &w, ctx);
    }
    let s = pantograph_sum(params, z, false, ctx.bits())?;
    s.require_relative(ctx)?;
    Ok(SeriesTail {
        value: s.value,
        tail_bound: s.abs_err,
        terms_used: s.terms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncOptions {
    /// Split index N is the least n with `|a/b| lambda^n < threshold`.
    pub threshold: f64,
}

impl Default for TruncOptions {
    fn default() -> Self {
        Self { threshold: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Degeneracy {
    None,
    /// `(a/b) lambda^degree = -1`: the solution is a polynomial.
    Polynomial { degree: usize },
    /// `(a/b) lambda^index` is within `distance` of -1 but not equal to it.
    Near { index: usize, distance: f64 },
}

#[derive(Debug, Clone)]
pub struct TruncatedEval {
    pub value: SeriesTail,
    pub split: usize,
    pub m_terms: usize,
    pub degeneracy: Degeneracy,
}

fn detect_degeneracy(alpha: &Complex, lambda: &Float, prec: u32) -> Degeneracy {
    let tol = -(prec as i32) + 8;
    let mut t = alpha.clone();
    let mut near = Degeneracy::None;
    for n in 0.. {
        let tm = Float::with_val(prec, t.abs_ref());
        if tm < 0.5f64 {
            break;
        }
        let d = Complex::with_val(prec, &t + 1u32);
        if d.is_zero() || log2_mag(&d).is_some_and(|e| e < tol) {
            return Degeneracy::Polynomial { degree: n };
        }
        let dist = Float::with_val(prec, d.abs_ref()).to_f64();
        if dist < 1e-8 && near == Degeneracy::None {
            near = Degeneracy::Near { index: n, distance: dist };
        }
        t *= lambda;
    }
    near
}

/// `sum_{n >= N} w^n / n!`
fn exp_remainder(w: &Complex, big_n: usize, prec: u32) -> Complex {
    let wabs = Float::with_val(prec, w.abs_ref()).to_f64();
    if wabs > (big_n + 1) as f64 {
        let mut e = Complex::with_val(prec, w.exp_ref());
        let mut t = Complex::with_val(prec, (1, 0));
        for n in 0..big_n {
            e -= &t;
            t *= w;
            t /= (n + 1) as u32;
        }
        return e;
    }
    let mut t = Complex::with_val(prec, w.pow(big_n as u32));
    t /= Float::with_val(prec, Float::factorial(big_n as u32));
    let mut acc = Complex::new(prec);
    let mut n = big_n;
    loop {
        acc += &t;
        t *= w;
        n += 1;
        t /= n as u32;
        let small = t.is_zero()
            || log2_mag(&t)
                .zip(log2_mag(&acc))
                .is_some_and(|(a, b)| a < b - prec as i32 - 4);
        if small && wabs < (n as f64) / 2.0 {
            break;
        }
    }
    acc
}

/// Evaluate through the split expansion: head `sum_{n<N} f_n z^n` plus the
/// m-series of shifted exponential remainders. Falls back to the exact
/// polynomial when `(a/b) lambda^n = -1` for some n.
pub fn pantograph_eval_truncated(
    params: &PantographParams,
    z: &Complex,
    opts: TruncOptions,
    ctx: &PrecCtx,
) -> Result<TruncatedEval> {
    let p = ctx.bits();
    if params.b.is_zero() {
        return Err(Error::RescaleToDeformedExp);
    }
    if !(opts.threshold > 0.0 && opts.threshold <= 1.0) {
        return Err(Error::InvalidParameter("threshold must lie in (0, 1]".into()));
    }
    let lam = &params.lambda;
    let alpha = Complex::with_val(p, &params.a / &params.b);
    let degeneracy = detect_degeneracy(&alpha, lam, p);

    if let Degeneracy::Polynomial { degree } = degeneracy {
        // f_n vanishes for n > degree: sum the finite polynomial
        let mut f = Complex::with_val(p, (1, 0));
        let mut zn = Complex::with_val(p, (1, 0));
        let mut acc = Complex::new(p);
        let mut pw = Float::with_val(p, 1);
        for n in 0..=degree {
            acc += Complex::with_val(p, &f * &zn);
            let mut r = Complex::with_val(p, &params.a * &pw);
            r += &params.b;
            r /= (n + 1) as u32;
            f *= &r;
            zn *= z;
            pw *= lam;
        }
        return Ok(TruncatedEval {
            value: SeriesTail {
                value: acc,
                tail_bound: Float::new(p),
                terms_used: degree + 1,
            },
            split: degree + 1,
            m_terms: 0,
            degeneracy,
        });
    }

    // split index
    let alpha_abs = Float::with_val(p, alpha.abs_ref());
    let mut big_n = 0usize;
    let mut rho = alpha_abs.clone();
    while rho >= opts.threshold {
        rho *= lam;
        big_n += 1;
    }
    // |a/b| lambda^N just below 1 (near-degenerate input) would leave an
    // m-series converging like rho^m with rho ~ 1; take one more head term.
    if rho > 0.99f64 {
        rho *= lam;
        big_n += 1;
    }

    // head: sum_{n<N} f_n z^n
    let mut head = Complex::new(p);
    let mut max_mag = Float::with_val(p, 1);
    {
        let mut f = Complex::with_val(p, (1, 0));
        let mut zn = Complex::with_val(p, (1, 0));
        let mut pw = Float::with_val(p, 1);
        for n in 0..big_n {
            let t = Complex::with_val(p, &f * &zn);
            max_mag = max_mag.max(&Float::with_val(p, t.abs_ref()));
            head += &t;
            let mut r = Complex::with_val(p, &params.a * &pw);
            r += &params.b;
            r /= (n + 1) as u32;
            f *= &r;
            zn *= z;
            pw *= lam;
        }
    }

    let q = q_pochhammer(&alpha, lam, ctx)?;
    let p_inf = recip_coeff_sup(lam, ctx)?;
    let q_abs = Float::with_val(p, q.value.abs_ref());
    let bz = Complex::with_val(p, &params.b * z);
    let bz_abs = Float::with_val(p, bz.abs_ref());
    // |Q| P_inf |bz|^N / N!
    let mut majorant = Float::with_val(p, &q_abs * &p_inf);
    majorant *= Float::with_val(p, (&bz_abs).pow(big_n as u32));
    majorant /= Float::with_val(p, Float::factorial(big_n as u32));
    let one_minus_rho = Float::with_val(p, 1 - &rho);

    let mut msum = Complex::new(p);
    let mut c_m = Float::with_val(p, 1);
    let mut alpha_m = Complex::with_val(p, (1, 0));
    let mut lam_m = Float::with_val(p, 1);
    let mut rho_m = Float::with_val(p, 1);
    let mut m = 0usize;
    let tail = loop {
        let w = Complex::with_val(p, &bz * &lam_m);
        let mut t = exp_remainder(&w, big_n, p);
        t *= &alpha_m;
        t *= &c_m;
        msum += &t;
        max_mag = max_mag.max(&Float::with_val(p, Float::with_val(p, t.abs_ref()) * &q_abs));

        m += 1;
        lam_m *= lam;
        rho_m *= &rho;
        alpha_m *= &alpha;
        c_m /= Float::with_val(p, 1 - &lam_m);
        c_m = -c_m;

        // bound on sum_{m' >= m} of the remaining terms
        let mut bound = Float::with_val(p, &majorant * &rho_m);
        bound /= &one_minus_rho;
        bound *= Float::with_val(p, Float::with_val(p, &bz_abs * &lam_m).exp_ref());
        let mut total = Complex::with_val(p, &msum * &q.value);
        total += &head;
        let tot = Float::with_val(p, total.abs_ref());
        let neg = bound.is_zero()
            || bound
                .get_exp()
                .zip(tot.get_exp())
                .is_some_and(|(b, t)| b < t - p as i32 - 2)
            || bound
                .get_exp()
                .zip(max_mag.get_exp())
                .is_some_and(|(b, mm)| b < mm - 2 * p as i32);
        if neg {
            break bound;
        }
        if m > 1_000_000 {
            return Err(Error::NonConvergence {
                what: "truncated m-series",
                iterations: m,
                last: format!("{:e}", bound.to_f64()),
            });
        }
    };

    let mut value = Complex::with_val(p, &msum * &q.value);
    value += &head;
    let mut err = Float::with_val(p, Float::u_exp((m + big_n + 1) as u32, -(p as i32)));
    err *= &max_mag;
    err += &tail;
    Ok(TruncatedEval {
        value: SeriesTail {
            value,
            tail_bound: err,
            terms_used: big_n + m,
        },
        split: big_n,
        m_terms: m,
        degeneracy,
    })
}

/// Multi-pantograph series via `(n+1) f_{n+1} = (sum_k a_k lambda_k^n + b) f_n`.
pub fn multipantograph_sum(
    params: &MultiPantographParams,
    z: &Complex,
    want_deriv: bool,
    prec: u32,
) -> Result<PowerSum<Complex>> {
    let lams: Vec<Float> = params.lambdas.iter().map(|l| Float::with_val(prec, l)).collect();
    let a: Vec<Complex> = params.a.iter().map(|x| Complex::with_val(prec, x)).collect();
    let a_abs: Vec<Float> = a.iter().map(|x| Float::with_val(prec, x.abs_ref())).collect();
    let b = Complex::with_val(prec, &params.b);
    let b_abs = Float::with_val(prec, b.abs_ref());
    let mut pws: Vec<Float> = vec![Float::with_val(prec, 1); lams.len()];
    sum_power_series(
        z,
        move |n| {
            let mut r = b.clone();
            let mut rho = b_abs.clone();
            for k in 0..pws.len() {
                r += Complex::with_val(prec, &a[k] * &pws[k]);
                rho += Float::with_val(prec, &a_abs[k] * &pws[k]);
                pws[k] *= &lams[k];
            }
            r /= (n + 1) as u32;
            rho /= (n + 1) as u32;
            (r, rho)
        },
        want_deriv,
        prec,
    )
}

pub fn multipantograph_eval(params: &MultiPantographParams, z: &Complex, ctx: &PrecCtx) -> Result<SeriesTail> {
    let s = multipantograph_sum(params, z, false, ctx.bits())?;
    s.require_relative(ctx)?;
    Ok(SeriesTail {
        value: s.value,
        tail_bound: s.abs_err,
        terms_used: s.terms,
    })
}
