//! Real zeros of real solutions.

use rayon::prelude::*;
use rug::{Complex, Float};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{refine_root, ChebInterpolant, PrecCtx};
use crate::series::{deformed_exp_real, pantograph_sum, PantographParams};
use crate::solver::{HighOrderSolution, PiecewiseSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroSource {
    Series,
    PiecewiseSolution,
}

#[derive(Debug, Clone)]
pub struct ZeroRecord {
    /// 0-based position among the zeros found from the scan start.
    pub n: usize,
    pub x: Float,
    /// Width of the final sign-change bracket.
    pub enclosure: Float,
    pub source: ZeroSource,
}

/// A real-valued function with an exact derivative, as seen by the zero finder.
pub trait RealFunction: Sync {
    fn eval(&self, x: &Float) -> Result<Float>;
    fn deriv(&self, x: &Float) -> Result<Float>;
    fn source(&self) -> ZeroSource;
    /// Chebyshev pieces that drive root localisation, when there are any.
    fn segments(&self) -> Vec<&ChebInterpolant<Float>> {
        Vec::new()
    }
    /// Expected ratio of consecutive zeros, used for geometric scans.
    fn zero_ratio(&self) -> Option<f64> {
        None
    }
}

/// Entire solution of `y' = a y(lambda x) + b y(x)`, `y(0) = 1`, on the real axis.
///
/// The working precision is raised by the bits of the largest series term,
/// so the absolute error stays near `2^-bits` even where the sum cancels.
#[derive(Debug, Clone)]
pub struct AnalyticSolution {
    params: PantographParams,
    ctx: PrecCtx,
}

impl AnalyticSolution {
    pub fn new(params: &PantographParams, ctx: &PrecCtx) -> Result<Self> {
        if !params.is_real() {
            return Err(Error::NonReal);
        }
        Ok(Self {
            params: params.clone(),
            ctx: *ctx,
        })
    }

    /// log2 of the largest term `|f_n x^n|`, from the coefficient recursion in doubles.
    fn max_term_log2(&self, x: f64) -> f64 {
        let lam = self.params.lambda().to_f64();
        let a = self.params.a().real().to_f64();
        let b = self.params.b().real().to_f64();
        let lx = x.abs().ln();
        let (mut lf, mut best, mut pw) = (0f64, 0f64, 1f64);
        for n in 0..100_000 {
            let r = (a * pw + b).abs();
            if r == 0.0 {
                break;
            }
            lf += r.ln() - ((n + 1) as f64).ln();
            let t = lf + (n + 1) as f64 * lx;
            best = best.max(t);
            pw *= lam;
            if n > 10 && t < best - 200.0 {
                break;
            }
        }
        best / std::f64::consts::LN_2
    }

    fn bits_for(&self, x: &Float) -> u32 {
        let extra = self.max_term_log2(x.to_f64()).max(0.0).ceil() as u32;
        (self.ctx.bits() + extra + 16).min(PrecCtx::MAX_BITS)
    }

    fn value_and_deriv(&self, x: &Float, want_deriv: bool) -> Result<(Float, Option<Float>)> {
        let p = self.bits_for(x);
        if self.params.b().is_zero() {
            // y(x) = g(-a x), y' = -a g'(-a x)
            let a = Float::with_val(p, self.params.a().real());
            let w = -Float::with_val(p, &a * x);
            let s = deformed_exp_real(self.params.lambda(), &w, p)?;
            let d = s.deriv.map(|d| Float::with_val(p, -(d * &a)));
            return Ok((s.value, d));
        }
        let s = pantograph_sum(&self.params, &Complex::with_val(p, (x, 0)), want_deriv, p)?;
        Ok((s.value.real().clone(), s.deriv.map(|d| d.real().clone())))
    }

    pub fn params(&self) -> &PantographParams {
        &self.params
    }
}

impl RealFunction for AnalyticSolution {
    fn eval(&self, x: &Float) -> Result<Float> {
        Ok(self.value_and_deriv(x, false)?.0)
    }
    fn deriv(&self, x: &Float) -> Result<Float> {
        Ok(self.value_and_deriv(x, true)?.1.unwrap())
    }
    fn source(&self) -> ZeroSource {
        ZeroSource::Series
    }
    fn zero_ratio(&self) -> Option<f64> {
        Some(self.params.q().to_f64())
    }
}

impl RealFunction for PiecewiseSolution<Float> {
    fn eval(&self, x: &Float) -> Result<Float> {
        PiecewiseSolution::eval(self, x)
    }
    fn deriv(&self, x: &Float) -> Result<Float> {
        self.eval_derivative(x)
    }
    fn source(&self) -> ZeroSource {
        ZeroSource::PiecewiseSolution
    }
    fn segments(&self) -> Vec<&ChebInterpolant<Float>> {
        self.pieces().iter().map(|p| &p.interp).collect()
    }
    fn zero_ratio(&self) -> Option<f64> {
        Some(self.params().q().to_f64())
    }
}

impl RealFunction for HighOrderSolution<Float> {
    fn eval(&self, x: &Float) -> Result<Float> {
        HighOrderSolution::eval(self, x)
    }
    fn deriv(&self, x: &Float) -> Result<Float> {
        self.eval_derivative(x)
    }
    fn source(&self) -> ZeroSource {
        ZeroSource::PiecewiseSolution
    }
    fn segments(&self) -> Vec<&ChebInterpolant<Float>> {
        self.pieces().iter().map(|p| &p.comps[0]).collect()
    }
    fn zero_ratio(&self) -> Option<f64> {
        self.fde().alpha_max().map(|a| 1.0 / a.to_f64())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Probe points per expected gap between zeros (geometric scans).
    pub per_gap: usize,
    /// Uniform probes per Chebyshev segment, on top of the colleague-matrix candidates.
    pub per_segment: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            per_gap: 32,
            per_segment: 64,
        }
    }
}

impl ScanOptions {
    /// Twice the probe density, for self-consistency rescans.
    pub fn doubled(self) -> Self {
        Self {
            per_gap: 2 * self.per_gap,
            per_segment: 2 * self.per_segment,
        }
    }
}

pub fn enumerate_zeros(f: &dyn RealFunction, x_lo: &Float, x_hi: &Float, max_count: usize, ctx: &PrecCtx) -> Result<Vec<ZeroRecord>> {
    enumerate_zeros_with(f, x_lo, x_hi, max_count, ScanOptions::default(), ctx)
}

enum Probe {
    Bracket(Float, Float),
    Exact(Float),
}

/// Sign changes along sorted probe points.
fn brackets(xs: &[Float], vals: &[Float]) -> Vec<Probe> {
    let mut out = Vec::new();
    for i in 0..xs.len() {
        if vals[i].is_zero() {
            out.push(Probe::Exact(xs[i].clone()));
            continue;
        }
        if i + 1 < xs.len() && !vals[i + 1].is_zero() && vals[i].is_sign_negative() != vals[i + 1].is_sign_negative() {
            out.push(Probe::Bracket(xs[i].clone(), xs[i + 1].clone()));
        }
    }
    out
}

fn probe(f: &dyn RealFunction, xs: Vec<Float>) -> Result<Vec<Probe>> {
    let vals: Vec<Float> = xs.par_iter().map(|x| f.eval(x)).collect::<Result<_>>()?;
    Ok(brackets(&xs, &vals))
}

/// Sorted probe points on one Chebyshev piece: a uniform grid plus midpoints
/// between colleague-matrix root candidates, so every candidate root gets
/// its own bracket.
fn segment_points(seg: &ChebInterpolant<Float>, lo: &Float, hi: &Float, per_segment: usize) -> Vec<Float> {
    let p = lo.prec();
    let width = Float::with_val(p, hi - lo);
    let mut xs: Vec<Float> = (0..=per_segment)
        .map(|j| Float::with_val(p, &width * j as u32) / per_segment as u32 + lo)
        .collect();
    let cands: Vec<f64> = seg
        .root_candidates()
        .into_iter()
        .filter(|&r| r > lo.to_f64() && r < hi.to_f64())
        .collect();
    for w in cands.windows(2) {
        xs.push(Float::with_val(p, 0.5 * (w[0] + w[1])));
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();
    xs
}

pub fn enumerate_zeros_with(
    f: &dyn RealFunction,
    x_lo: &Float,
    x_hi: &Float,
    max_count: usize,
    opts: ScanOptions,
    ctx: &PrecCtx,
) -> Result<Vec<ZeroRecord>> {
    let p = ctx.bits();
    if !(x_lo < x_hi) {
        return Err(Error::InvalidParameter("empty scan interval".into()));
    }
    if max_count == 0 {
        return Ok(Vec::new());
    }
    let mut segs: Vec<&ChebInterpolant<Float>> = f
        .segments()
        .into_iter()
        .filter(|s| s.hi() > x_lo && s.lo() < x_hi)
        .collect();
    segs.sort_by(|a, b| a.lo().total_cmp(b.lo()));

    // walk [x_lo, x_hi] left to right: geometric scan in gaps, segment scan on pieces
    let mut zeros: Vec<ZeroRecord> = Vec::new();
    let mut cursor = Float::with_val(p, x_lo);
    let mut seg_iter = segs.into_iter().peekable();
    while cursor < *x_hi && zeros.len() < max_count {
        let next_seg = seg_iter.peek().copied();
        let (stop, seg) = match next_seg {
            Some(s) if s.lo() <= &cursor => (Float::with_val(p, s.hi()).min(x_hi), Some(s)),
            Some(s) => (Float::with_val(p, s.lo()).min(x_hi), None),
            None => (Float::with_val(p, x_hi), None),
        };
        let found = match seg {
            Some(s) => {
                seg_iter.next();
                probe(f, segment_points(s, &cursor, &stop, opts.per_segment))?
            }
            None => geometric_scan(f, &cursor, &stop, max_count - zeros.len(), opts, ctx)?,
        };
        refine_all(f, found, &mut zeros, ctx)?;
        cursor = stop;
    }
    zeros.truncate(max_count);
    for (i, z) in zeros.iter_mut().enumerate() {
        z.n = i;
    }
    Ok(zeros)
}

fn refine_all(f: &dyn RealFunction, found: Vec<Probe>, zeros: &mut Vec<ZeroRecord>, ctx: &PrecCtx) -> Result<()> {
    let p = ctx.bits();
    let ev = |x: &Float| f.eval(x);
    let dv = |x: &Float| f.deriv(x);
    let refined: Vec<(Float, Float)> = found
        .into_par_iter()
        .map(|pr| match pr {
            Probe::Exact(x) => Ok((x, Float::new(p))),
            Probe::Bracket(a, b) => refine_root(&ev, Some(&dv), &a, &b, ctx).map(|r| (r.root, r.width)),
        })
        .collect::<Result<_>>()?;
    for (x, w) in refined {
        // a zero sitting on a shared probe point is reported once
        if zeros.last().is_some_and(|z| z.x == x) {
            continue;
        }
        zeros.push(ZeroRecord {
            n: 0,
            x,
            enclosure: w,
            source: f.source(),
        });
    }
    Ok(())
}

/// Probe grid whose spacing tracks the expected zero gap `x (q - 1)`.
fn geometric_scan(f: &dyn RealFunction, lo: &Float, hi: &Float, want: usize, opts: ScanOptions, ctx: &PrecCtx) -> Result<Vec<Probe>> {
    let p = ctx.bits();
    let q = f.zero_ratio().unwrap_or(2.0);
    let step = 1.0 + (q - 1.0) / opts.per_gap as f64;
    let floor = Float::with_val(p, hi * 1e-6).min(&Float::with_val(p, 1e-3));
    let mut xs: Vec<Float> = Vec::new();
    let mut x = Float::with_val(p, lo);
    if x < floor {
        // uniform start near the origin, where the geometric grid is useless
        let n = opts.per_gap;
        let w = Float::with_val(p, &floor - lo);
        xs.extend((0..n).map(|j| Float::with_val(p, &w * j as u32) / n as u32 + lo));
        x = floor;
    }
    while x < *hi {
        xs.push(x.clone());
        x *= step;
    }
    xs.push(Float::with_val(p, hi));

    let mut out = Vec::new();
    let mut count = 0;
    const CHUNK: usize = 256;
    let mut start = 0;
    while start + 1 < xs.len() {
        let end = (start + CHUNK).min(xs.len() - 1);
        let chunk = xs[start..=end].to_vec();
        let found = probe(f, chunk)?;
        count += found.len();
        out.extend(found);
        if count >= want {
            break;
        }
        start = end;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{continue_solution, InitialFunction};

    fn half_analytic(c: &PrecCtx) -> AnalyticSolution {
        AnalyticSolution::new(&PantographParams::real(0.5, -1.0, 0.0, c).unwrap(), c).unwrap()
    }

    #[test]
    fn first_zero_against_dense_scan_at_512_bits() {
        let c = PrecCtx::default();
        let f = half_analytic(&c);
        let z = enumerate_zeros(&f, &c.real(0), &c.real(3), 5, &c).unwrap();
        assert_eq!(z.len(), 1);
        // oracle: dense uniform sign scan and plain bisection at 512 bits
        let hi = PrecCtx::with_bits(512).unwrap();
        let g = |x: &Float| deformed_exp_real(&hi.real(0.5), x, 512).unwrap().value;
        let n = 100_000;
        let mut a = hi.real(0);
        for i in 1..=n {
            let x = hi.real(3) * i / n as u32;
            if g(&x).is_sign_negative() {
                a = hi.real(3) * (i - 1) / n as u32;
                break;
            }
        }
        let mut b = Float::with_val(512, &a + hi.real(3) / n as u32);
        for _ in 0..120 {
            let m = Float::with_val(512, &a + &b) / 2u32;
            if g(&m).is_sign_negative() {
                b = m;
            } else {
                a = m;
            }
        }
        let d = Float::with_val(512, &z[0].x - &a).abs().to_f64();
        assert!(d < 1e-29, "{d:e}");
        assert!(z[0].enclosure.to_f64() <= 1e-30 * z[0].x.to_f64() * 1.01);
    }

    #[test]
    fn double_density_agrees_up_to_two_pow_15() {
        let c = PrecCtx::with_bits(128).unwrap();
        let f = half_analytic(&c);
        let hi = c.real(32768);
        let a = enumerate_zeros(&f, &c.real(0), &hi, 100, &c).unwrap();
        let b = enumerate_zeros_with(&f, &c.real(0), &hi, 100, ScanOptions::default().doubled(), &c).unwrap();
        assert_eq!(a.len(), b.len());
        assert_eq!(a.len(), 12);
        let t = [1.488, 4.881, 13.56, 34.78];
        for (z, w) in a.iter().zip(t) {
            assert!((z.x.to_f64() - w).abs() < 5e-3);
        }
    }

    #[test]
    fn no_sign_change_gives_nothing() {
        let c = PrecCtx::default();
        let f = half_analytic(&c);
        assert!(enumerate_zeros(&f, &c.real(2), &c.real(4), 10, &c).unwrap().is_empty());
        assert!(enumerate_zeros(&f, &c.real(0), &c.real(1), 10, &c).unwrap().is_empty());
    }

    #[test]
    fn piecewise_solution_zeros_match_series_and_probe_grid() {
        let c = PrecCtx::default();
        let params = PantographParams::real(0.5, -1.0, 0.0, &c).unwrap();
        let phi = InitialFunction::<Float>::analytic(&params, &c.real(1), &c).unwrap();
        let sol = continue_solution(&params, &phi, &c.real(300), &c).unwrap();
        let a = enumerate_zeros(&sol, &c.real(1), &c.real(300), 50, &c).unwrap();
        let b = enumerate_zeros(&half_analytic(&c), &c.real(1), &c.real(300), 50, &c).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.source, ZeroSource::PiecewiseSolution);
            assert!(Float::with_val(256, &x.x - &y.x).abs().to_f64() < 1e-25 * y.x.to_f64());
        }
        // constant sign between consecutive zeros on a 64-point probe grid
        for w in a.windows(2) {
            let width = Float::with_val(256, &w[1].x - &w[0].x);
            let signs: Vec<bool> = (1..64)
                .map(|j| {
                    let x = Float::with_val(256, &width * j) / 64u32 + &w[0].x;
                    RealFunction::eval(&sol, &x).unwrap().is_sign_negative()
                })
                .collect();
            assert!(signs.iter().all(|s| *s == signs[0]));
        }
    }

    #[test]
    fn max_count_and_zero_count() {
        let c = PrecCtx::with_bits(128).unwrap();
        let f = half_analytic(&c);
        assert!(enumerate_zeros(&f, &c.real(0), &c.real(100), 0, &c).unwrap().is_empty());
        assert_eq!(enumerate_zeros(&f, &c.real(0), &c.real(1e6), 3, &c).unwrap().len(), 3);
    }
}
