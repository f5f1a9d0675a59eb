//! Method of steps on the geometric mesh `x0 q^k`.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::numerics::{cheb_fit, ChebInterpolant, PrecCtx, Scalar};
use crate::series::PantographParams;
use crate::solver::initial::InitialFunction;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Degree cap before a piece is bisected.
    pub max_degree: usize,
    /// Fit tolerance relative to the piece scale; `None` uses `target / 100`.
    pub fit_rel_tol: Option<f64>,
    pub max_bisections: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_degree: 128,
            fit_rel_tol: None,
            max_bisections: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolutionPiece<T: Scalar> {
    pub interp: ChebInterpolant<T>,
    /// Estimated absolute error, including what was inherited from earlier pieces.
    pub err: Float,
}

/// Solution on `[lambda x0, X]`: the initial function followed by Chebyshev
/// pieces. Segment `k` is `[x0 q^k, x0 q^(k+1)]`, cut further at images of
/// the initial function's break points and wherever the degree cap forced a
/// bisection.
#[derive(Debug, Clone)]
pub struct PiecewiseSolution<T: Scalar> {
    params: PantographParams,
    a: T,
    b: T,
    phi: InitialFunction<T>,
    knots: Vec<Float>,
    pieces: Vec<SolutionPiece<T>>,
    global_err: Float,
    ctx: PrecCtx,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// Largest `|y' - a y(lambda x) - b y(x)|` over the local solution scale.
    pub max_rel: f64,
    pub worst_x: f64,
    pub samples: usize,
}

/// Fit with degree doubling until the last three coefficients are below
/// `rel` times the coefficient mass.
/// Largest `|b| (h - l)` allowed on one piece.
const MAX_GROWTH: f64 = 2.0;

fn fit_relative<T, F>(f: F, lo: &Float, hi: &Float, rel: f64, max_degree: usize, ctx: &PrecCtx) -> Result<Option<ChebInterpolant<T>>>
where
    T: Scalar,
    F: Fn(&Float) -> Result<T> + Sync,
{
    let p = ctx.bits();
    let mut degree = 16.min(max_degree);
    loop {
        let mut fit = cheb_fit(&f, lo, hi, degree, ctx)?;
        let scale = fit.scale_bound();
        let n = fit.coeffs().len();
        let mut trailing = Float::new(p);
        for c in &fit.coeffs()[n - 3.min(n)..] {
            trailing += c.magnitude();
        }
        let tol = Float::with_val(p, &scale * rel);
        if trailing <= tol || scale.is_zero() {
            fit.trim(&Float::with_val(p, &tol / 2u32));
            return Ok(Some(fit));
        }
        if degree >= max_degree {
            return Ok(None);
        }
        degree = (degree * 2).min(max_degree);
    }
}

/// Read-only view of everything left of the piece under construction.
struct Known<'a, T: Scalar> {
    phi: &'a InitialFunction<T>,
    pieces: &'a [SolutionPiece<T>],
}

impl<T: Scalar> Known<'_, T> {
    fn piece_at(&self, x: &Float) -> usize {
        let k = self.pieces.partition_point(|p| p.interp.lo() <= x);
        k.max(1) - 1
    }

    fn eval(&self, x: &Float) -> Result<T> {
        if self.pieces.is_empty() || x <= self.phi.x0() {
            return self.phi.eval(x);
        }
        Ok(self.pieces[self.piece_at(x)].interp.eval(x))
    }

    /// Piece boundaries of the computed solution strictly inside `(lo, hi)`.
    fn interior_knots(&self, lo: &Float, hi: &Float) -> Vec<Float> {
        let p = lo.prec();
        let slack = Float::with_val(p, Float::with_val(p, hi - lo) * 1e-20);
        let (a, b) = (Float::with_val(p, lo + &slack), Float::with_val(p, hi - &slack));
        self.pieces
            .iter()
            .map(|pc| pc.interp.lo())
            .filter(|k| **k > a && **k < b)
            .cloned()
            .collect()
    }

    /// Evaluator of `y` on `[lo, hi]` that sticks to a single smooth piece
    /// when one covers the interval (rounding at shared end points must not
    /// pull in a neighbour across a kink), plus that source's error and scale.
    fn source(&self, lo: &Float, hi: &Float) -> (Box<dyn Fn(&Float) -> Result<T> + Sync + '_>, Float, Float) {
        let p = lo.prec();
        let mid = Float::with_val(p, lo + hi) / 2u32;
        let width = Float::with_val(p, hi - lo);
        let slack = Float::with_val(p, &width * 1e-20);
        let covers = |a: &Float, b: &Float| {
            Float::with_val(p, a - &slack) <= *lo && Float::with_val(p, b + &slack) >= *hi
        };
        if self.pieces.is_empty() || mid <= *self.phi.x0() {
            let i = self.phi.piece_index(&mid);
            let br = self.phi.breaks();
            let phi = self.phi;
            if covers(&br[i], &br[i + 1]) {
                return (Box::new(move |x| phi.eval_in_piece(i, x)), Float::new(p), Float::new(p));
            }
            return (Box::new(move |x| phi.eval(x)), Float::new(p), Float::new(p));
        }
        let i = self.piece_at(&mid);
        let pc = &self.pieces[i];
        if covers(pc.interp.lo(), pc.interp.hi()) {
            return (Box::new(move |x| Ok(pc.interp.eval(x))), pc.err.clone(), pc.interp.scale_bound());
        }
        let (mut err, mut scale) = (Float::new(p), Float::new(p));
        for pc in self.pieces.iter().filter(|pc| pc.interp.hi() > lo && pc.interp.lo() < hi) {
            err = err.max(&pc.err);
            scale = scale.max(&pc.interp.scale_bound());
        }
        (Box::new(move |x| self.eval(x)), err, scale)
    }
}

struct Builder<'a, T: Scalar> {
    a: &'a T,
    b: &'a T,
    b_is_zero: bool,
    lambda: &'a Float,
    a_abs: Float,
    b_abs: Float,
    rel: f64,
    opts: SolverOptions,
    ctx: &'a PrecCtx,
}

impl<T: Scalar> Builder<'_, T> {
    /// Pieces covering `[l, h]` given `y(l)` and its error.
    fn build(&self, known: &Known<T>, l: &Float, h: &Float, y_l: &T, y_l_err: &Float, depth: usize) -> Result<Vec<SolutionPiece<T>>> {
        let p = self.ctx.bits();
        let lam_l = Float::with_val(p, l * self.lambda);
        let lam_h = Float::with_val(p, h * self.lambda);
        // delayed argument crosses source pieces: split at their preimages
        let cuts = known.interior_knots(&lam_l, &lam_h);
        if !cuts.is_empty() {
            let mut out: Vec<SolutionPiece<T>> = Vec::new();
            let mut ends: Vec<Float> = cuts.iter().map(|c| Float::with_val(p, c / self.lambda)).collect();
            ends.push(h.clone());
            let (mut lo, mut y, mut e) = (l.clone(), y_l.clone(), y_l_err.clone());
            for end in ends {
                let new = self.build(known, &lo, &end, &y, &e, depth)?;
                let last = new.last().unwrap();
                y = last.interp.eval(&end);
                e = last.err.clone();
                out.extend(new);
                lo = end;
            }
            return Ok(out);
        }
        let (src, src_err, src_scale) = known.source(&lam_l, &lam_h);
        let len = Float::with_val(p, h - l);
        if Float::with_val(p, &len * &self.b_abs) > MAX_GROWTH {
            // keep |e^{b x}| nearly flat on a piece so absolute errors stay relative
            let mid = Float::with_val(p, l + h) / 2u32;
            let mut left = self.build(known, l, &mid, y_l, y_l_err, depth)?;
            let last = left.last().unwrap();
            let (y_mid, err_mid) = (last.interp.eval(&mid), last.err.clone());
            left.extend(self.build(known, &mid, h, &y_mid, &err_mid, depth)?);
            return Ok(left);
        }
        let mut amp = Float::with_val(p, &len * &self.b_abs);
        amp.exp_mut();
        let u = |s: &Float| src(&Float::with_val(p, s * self.lambda));

        let piece = if self.b_is_zero {
            fit_relative(u, l, h, self.rel, self.opts.max_degree, self.ctx)?.map(|uf| {
                let v = uf.antiderivative();
                let mut coeffs: Vec<T> = v.coeffs().iter().map(|c| c.mul(self.a)).collect();
                coeffs[0] = coeffs[0].add(y_l);
                let tail = Float::with_val(p, v.tail_bound() * &self.a_abs);
                (coeffs, tail, Float::with_val(p, 1))
            })
        } else {
            let decay = |s: &Float| T::from_real(&Float::with_val(p, s - l)).mul(self.b).neg().exp();
            let vf = fit_relative(|s: &Float| Ok(decay(s).mul(&u(s)?)), l, h, self.rel, self.opts.max_degree, self.ctx)?;
            match vf {
                None => None,
                Some(vf) => {
                    let v = vf.antiderivative();
                    // y = e^{b (x - l)} (y_l + a V), multiplied out in coefficient space:
                    // refitting the product by sampling would put its fit error into y'
                    let grow = |x: &Float| Ok(T::from_real(&Float::with_val(p, x - l)).mul(self.b).exp());
                    let full = 2f64.powi(8 - p as i32);
                    let ef = fit_relative(grow, l, h, full, self.opts.max_degree.max(64), self.ctx)?
                        .ok_or_else(|| Error::NonConvergence {
                            what: "exponential factor fit",
                            iterations: 1,
                            last: format!("[{}, {}]", l.to_f64(), h.to_f64()),
                        })?;
                    let mut w: Vec<T> = v.coeffs().iter().map(|c| c.mul(self.a)).collect();
                    w[0] = w[0].add(y_l);
                    let wf = ChebInterpolant::from_coeffs(l.clone(), h.clone(), w)?;
                    let mut yf = ef.product(&wf)?;
                    let mut keep = yf.scale_bound();
                    keep *= self.ctx.ulp();
                    yf.trim(&keep);
                    // |e^{b (x - l)}| over the piece, times the weight |e^{-b (s - l)}| in V
                    let mut tail = Float::with_val(p, v.tail_bound() * &self.a_abs);
                    tail *= &amp;
                    tail += Float::with_val(p, ef.tail_bound() * &wf.scale_bound());
                    tail += keep;
                    Some((yf.coeffs().to_vec(), tail, amp.clone()))
                }
            }
        };

        let Some((coeffs, tail, amp)) = piece else {
            if depth >= self.opts.max_bisections {
                return Err(Error::NonConvergence {
                    what: "segment fit",
                    iterations: depth,
                    last: format!("[{}, {}] at degree {}", l.to_f64(), h.to_f64(), self.opts.max_degree),
                });
            }
            let mid = Float::with_val(p, l + h) / 2u32;
            let mut left = self.build(known, l, &mid, y_l, y_l_err, depth + 1)?;
            let last = left.last().unwrap();
            let y_mid = last.interp.eval(&mid);
            let err_mid = last.err.clone();
            let right = self.build(known, &mid, h, &y_mid, &err_mid, depth + 1)?;
            left.extend(right);
            return Ok(left);
        };

        let mut interp = ChebInterpolant::from_coeffs(l.clone(), h.clone(), coeffs)?;
        // inherited: start value and delayed values, both carried through the integral
        let mut err = Float::with_val(p, &src_err * &self.a_abs);
        err *= &len;
        err += y_l_err;
        err *= &amp;
        err += &tail;
        let mut round = interp.scale_bound().max(&src_scale);
        round *= self.ctx.ulp();
        round *= interp.coeffs().len() as u32;
        interp.set_tail_bound(Float::with_val(p, &tail + &round));
        err += round;
        Ok(vec![SolutionPiece { interp, err }])
    }
}

/// Continue `phi` to a solution of `y' = a y(lambda x) + b y(x)` on `[x0, X]`
/// with `X >= x_max`.
pub fn continue_solution<T: Scalar>(
    params: &PantographParams,
    phi: &InitialFunction<T>,
    x_max: &Float,
    ctx: &PrecCtx,
) -> Result<PiecewiseSolution<T>> {
    continue_solution_with(params, phi, x_max, SolverOptions::default(), ctx)
}

pub fn continue_solution_with<T: Scalar>(
    params: &PantographParams,
    phi: &InitialFunction<T>,
    x_max: &Float,
    opts: SolverOptions,
    ctx: &PrecCtx,
) -> Result<PiecewiseSolution<T>> {
    let p = ctx.bits();
    let a = T::try_from_complex(&Complex::with_val(p, params.a())).ok_or(Error::NonReal)?;
    let b = T::try_from_complex(&Complex::with_val(p, params.b())).ok_or(Error::NonReal)?;
    let lambda = Float::with_val(p, params.lambda());
    if Float::with_val(p, &lambda - phi.lambda()).abs() > Float::with_val(p, &lambda * 1e-25) {
        return Err(Error::InvalidParameter(format!(
            "initial function was built for lambda = {}, equation has {}",
            phi.lambda().to_f64(),
            lambda.to_f64()
        )));
    }
    let x0 = Float::with_val(p, phi.x0());
    if !(*x_max > x0) {
        return Err(Error::InvalidParameter(format!(
            "X_max = {} must exceed x0 = {}",
            x_max.to_f64(),
            x0.to_f64()
        )));
    }
    let q = Float::with_val(p, params.q());
    let builder = Builder {
        a: &a,
        b: &b,
        b_is_zero: params.b().is_zero(),
        lambda: &lambda,
        a_abs: Float::with_val(p, params.a().abs_ref()),
        b_abs: Float::with_val(p, params.b().abs_ref()),
        rel: opts.fit_rel_tol.unwrap_or(ctx.target() * 1e-2),
        opts,
        ctx,
    };

    let mut pieces: Vec<SolutionPiece<T>> = Vec::new();
    let mut knots = vec![x0.clone()];
    let mut y_l = phi.eval(&x0)?;
    let mut y_err = Float::new(p);
    let mut k = 0u32;
    while *knots.last().unwrap() < *x_max {
        k += 1;
        let qk = Float::with_val(p, (&q).pow(k));
        let mut bps: Vec<Float> = phi.breaks().iter().map(|b| Float::with_val(p, b * &qk)).collect();
        bps[0] = knots.last().unwrap().clone();
        let mut fresh = Vec::new();
        for w in bps.windows(2) {
            let known = Known { phi, pieces: &pieces };
            let new = builder.build(&known, &w[0], &w[1], &y_l, &y_err, 0)?;
            let last = new.last().unwrap();
            y_l = last.interp.eval(&w[1]);
            y_err = last.err.clone();
            fresh.extend(new);
        }
        // segment k only reads segment k-1, so it can be appended afterwards
        pieces.extend(fresh);
        knots.push(bps.last().unwrap().clone());
    }

    let mut global = Float::new(p);
    for pc in &pieces {
        let s = pc.interp.scale_bound();
        if !s.is_zero() {
            global = global.max(&Float::with_val(p, &pc.err / &s));
        }
    }
    Ok(PiecewiseSolution {
        params: params.clone(),
        a,
        b,
        phi: phi.clone(),
        knots,
        pieces,
        global_err: global,
        ctx: *ctx,
    })
}

impl<T: Scalar> PiecewiseSolution<T> {
    pub fn params(&self) -> &PantographParams {
        &self.params
    }
    pub fn phi(&self) -> &InitialFunction<T> {
        &self.phi
    }
    /// Mesh knots `x0 q^k`, `k = 0..K`.
    pub fn knots(&self) -> &[Float] {
        &self.knots
    }
    pub fn pieces(&self) -> &[SolutionPiece<T>] {
        &self.pieces
    }
    /// Largest piece error relative to the piece's coefficient mass (reported, not certified).
    pub fn global_err(&self) -> &Float {
        &self.global_err
    }
    pub fn ctx(&self) -> &PrecCtx {
        &self.ctx
    }
    /// `[lambda x0, X]`.
    pub fn domain(&self) -> (Float, Float) {
        (self.phi.lo().clone(), self.knots.last().unwrap().clone())
    }

    fn known(&self) -> Known<'_, T> {
        Known {
            phi: &self.phi,
            pieces: &self.pieces,
        }
    }

    fn check_domain(&self, x: &Float, lo: &Float) -> Result<()> {
        let hi = self.knots.last().unwrap();
        if x < lo || x > hi {
            return Err(Error::OutOfDomain {
                x: x.to_f64(),
                lo: lo.to_f64(),
                hi: hi.to_f64(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &Float) -> Result<T> {
        self.check_domain(x, self.phi.lo())?;
        self.known().eval(x)
    }

    /// `y'(x) = a y(lambda x) + b y(x)` for `x >= x0`.
    pub fn eval_derivative(&self, x: &Float) -> Result<T> {
        self.check_domain(x, self.phi.x0())?;
        let p = self.ctx.bits();
        let known = self.known();
        let d = known.eval(&Float::with_val(p, x * self.params.lambda()))?.mul(&self.a);
        if self.params.b().is_zero() {
            return Ok(d);
        }
        Ok(d.add(&known.eval(x)?.mul(&self.b)))
    }

    /// Values on a grid of points, evaluated in parallel.
    pub fn sample(&self, grid: &[Float]) -> Result<Vec<T>> {
        grid.par_iter().map(|x| self.eval(x)).collect()
    }

    /// FDE residual at `per_piece` interior points of every piece, using the
    /// derivative of the interpolant.
    pub fn residual_check(&self, per_piece: usize) -> Result<ResidualReport> {
        let p = self.ctx.bits();
        let a_abs = Float::with_val(p, self.params.a().abs_ref());
        let b_abs = Float::with_val(p, self.params.b().abs_ref());
        let known = self.known();
        let per_piece = per_piece.max(1);
        let worst = self
            .pieces
            .par_iter()
            .map(|pc| -> Result<(f64, f64)> {
                let d = pc.interp.derivative();
                let lo = pc.interp.lo();
                let width = Float::with_val(p, pc.interp.hi() - lo);
                let lam = self.params.lambda();
                let (_, _, src_scale) = known.source(&Float::with_val(p, lo * lam), &Float::with_val(p, pc.interp.hi() * lam));
                let mut scale = d.scale_bound();
                scale += Float::with_val(p, &a_abs * &src_scale.max(&pc.interp.scale_bound()));
                scale += Float::with_val(p, &b_abs * &pc.interp.scale_bound());
                let mut best = (0f64, lo.to_f64());
                for j in 0..per_piece {
                    let mut x = Float::with_val(p, &width * (2 * j + 1) as u32);
                    x /= (2 * per_piece) as u32;
                    x += lo;
                    let rhs = self.eval_derivative(&x)?;
                    let r = d.eval(&x).sub(&rhs).magnitude();
                    let rel = Float::with_val(p, &r / &scale).to_f64();
                    if rel > best.0 {
                        best = (rel, x.to_f64());
                    }
                }
                Ok(best)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold((0f64, 0f64), |acc, v| if v.0 > acc.0 { v } else { acc });
        Ok(ResidualReport {
            max_rel: worst.0,
            worst_x: worst.1,
            samples: per_piece * self.pieces.len(),
        })
    }
}

pub fn eval_solution<T: Scalar>(sol: &PiecewiseSolution<T>, x: &Float) -> Result<T> {
    sol.eval(x)
}

pub fn eval_derivative<T: Scalar>(sol: &PiecewiseSolution<T>, x: &Float) -> Result<T> {
    sol.eval_derivative(x)
}
