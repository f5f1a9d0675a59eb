//! Zeros of `G(log x - log log x)` for a period-2 factor `G` with zeros at `x0 + k`.

use rug::ops::Pow;
use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::PrecCtx;
use crate::series::check_lambda;
use crate::zeros::report::CheckReport;

#[derive(Debug, Clone)]
pub struct LemmaZero {
    pub k: u32,
    pub x: Float,
    /// `C_k = x_k / (k q^k)`.
    pub c: Float,
}

#[derive(Serialize)]
struct Row {
    k: u32,
    x: f64,
    c: f64,
    rel_dev: f64,
    bound: f64,
}

/// Solve `log x - log log x = (x0 + k) log q` for `k = 1..=k_max`, skipping
/// the `k` whose right side does not exceed 1 (no root with `x > e`).
pub fn lemma_zero_map(x0: &Float, lambda: &Float, k_max: u32, ctx: &PrecCtx) -> Result<Vec<LemmaZero>> {
    check_lambda(lambda)?;
    if !(*x0 >= 0 && *x0 < 1) {
        return Err(Error::InvalidParameter(format!("x0 = {} not in [0,1)", x0.to_f64())));
    }
    let p = ctx.bits();
    let q = Float::with_val(p, lambda.recip_ref());
    let lq = Float::with_val(p, q.ln_ref());
    let mut out = Vec::new();
    for k in 1..=k_max {
        let rhs = Float::with_val(p, x0 + k) * &lq;
        if rhs <= 1 {
            continue;
        }
        // u = log x solves u - log u = rhs; Newton from u = rhs + log rhs
        let mut u = Float::with_val(p, rhs.ln_ref()) + &rhs;
        let mut converged = false;
        for _ in 0..200 {
            let f = Float::with_val(p, &u - Float::with_val(p, u.ln_ref())) - &rhs;
            let df = 1 - Float::with_val(p, u.recip_ref());
            let step = Float::with_val(p, &f / &df);
            u -= &step;
            if Float::with_val(p, step.abs_ref()) <= Float::with_val(p, &u * ctx.ulp()) * 4u32 {
                converged = true;
                break;
            }
        }
        if !converged || !(u > 1) {
            return Err(Error::NonConvergence {
                what: "lemma Newton solve",
                iterations: 200,
                last: format!("k = {k}, u = {}", u.to_f64()),
            });
        }
        let x = Float::with_val(p, u.exp_ref());
        let mut c = Float::with_val(p, &x / Float::with_val(p, (&q).pow(k)));
        c /= k;
        out.push(LemmaZero { k, x, c });
    }
    Ok(out)
}

/// `|C_k / (q^x0 log q) - 1| <= m log k / k` over `k` in `[k_lo, k_hi]`.
pub fn lemma_check(x0: &Float, lambda: &Float, m: f64, k_lo: u32, k_hi: u32, ctx: &PrecCtx) -> Result<CheckReport> {
    let p = ctx.bits();
    let zs = lemma_zero_map(x0, lambda, k_hi, ctx)?;
    let q = Float::with_val(p, lambda.recip_ref());
    let limit = Float::with_val(p, (&q).pow(x0)) * Float::with_val(p, q.ln_ref());
    let mut rows = Vec::new();
    let mut worst_ratio = 0f64;
    let mut pass = true;
    let monotone = zs.windows(2).all(|w| w[0].x < w[1].x);
    for z in zs.iter().filter(|z| z.k >= k_lo) {
        let rel = (Float::with_val(p, &z.c / &limit) - 1u32).abs().to_f64();
        let bound = m * (z.k as f64).ln() / z.k as f64;
        worst_ratio = worst_ratio.max(rel / bound);
        pass &= rel <= bound;
        rows.push(Row {
            k: z.k,
            x: z.x.to_f64(),
            c: z.c.to_f64(),
            rel_dev: rel,
            bound,
        });
    }
    Ok(CheckReport::new("lemma_zero_map", pass && monotone && !rows.is_empty())
        .stat("limit", limit.to_f64())
        .stat("m", m)
        .stat("k_lo", k_lo)
        .stat("k_hi", k_hi)
        .stat("worst_dev_over_bound", worst_ratio)
        .stat("monotone", monotone)
        .with_data(serde_json::to_value(rows).expect("plain rows")))
}
