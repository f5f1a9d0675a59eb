//! `y^(m)(x) = sum a_jk y^(k)(alpha_j x)` with all shifts zero.

use rayon::prelude::*;
use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::numerics::{ChebInterpolant, PrecCtx, Scalar};
use crate::solver::initial::InitialFunction;
use crate::solver::steps::ResidualReport;

#[derive(Debug, Clone)]
pub struct HighOrderTerm {
    /// Label of the scaling factor `alpha_j`; several terms may share one.
    pub j: usize,
    /// Derivative order on the right, `k < m`.
    pub k: usize,
    pub a: Complex,
    pub alpha: Float,
    /// Argument shift; only `0` is supported by the solver.
    pub beta: Float,
}

#[derive(Debug, Clone)]
pub struct HighOrderFDE {
    m: usize,
    terms: Vec<HighOrderTerm>,
}

impl HighOrderFDE {
    pub fn new(m: usize, terms: Vec<HighOrderTerm>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("order m must be at least 1".into()));
        }
        for t in &terms {
            if !(t.alpha > 0 && t.alpha < 1) {
                return Err(Error::InvalidParameter(format!(
                    "alpha_{} = {} is not in (0,1)",
                    t.j,
                    t.alpha.to_f64()
                )));
            }
            if t.k >= m {
                return Err(Error::InvalidParameter(format!("derivative order {} on the right needs k < m = {m}", t.k)));
            }
        }
        Ok(Self { m, terms })
    }

    /// Terms `(j, k, a, alpha)` with zero shifts.
    pub fn compressed(m: usize, terms: &[(usize, usize, Complex, Float)]) -> Result<Self> {
        let terms = terms
            .iter()
            .map(|(j, k, a, alpha)| HighOrderTerm {
                j: *j,
                k: *k,
                a: a.clone(),
                alpha: alpha.clone(),
                beta: Float::new(alpha.prec()),
            })
            .collect();
        Self::new(m, terms)
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn terms(&self) -> &[HighOrderTerm] {
        &self.terms
    }
    pub fn alpha_min(&self) -> Option<&Float> {
        self.terms.iter().map(|t| &t.alpha).min_by(|a, b| a.total_cmp(b))
    }
    pub fn alpha_max(&self) -> Option<&Float> {
        self.terms.iter().map(|t| &t.alpha).max_by(|a, b| a.total_cmp(b))
    }
}

#[derive(Debug, Clone)]
pub struct HighOrderPiece<T: Scalar> {
    /// Interpolants of `y, y', ..., y^(m-1)`.
    pub comps: Vec<ChebInterpolant<T>>,
    pub err: Float,
}

/// Vector-valued method-of-steps solution on `[alpha_min x0, X]`.
#[derive(Debug, Clone)]
pub struct HighOrderSolution<T: Scalar> {
    fde: HighOrderFDE,
    coeffs: Vec<T>,
    init: Vec<InitialFunction<T>>,
    knots: Vec<Float>,
    pieces: Vec<HighOrderPiece<T>>,
    global_err: Float,
    ctx: PrecCtx,
}

struct View<'a, T: Scalar> {
    init: &'a [InitialFunction<T>],
    pieces: &'a [HighOrderPiece<T>],
}

impl<T: Scalar> View<'_, T> {
    fn eval(&self, k: usize, x: &Float) -> Result<T> {
        if self.pieces.is_empty() || x <= self.init[k].x0() {
            return self.init[k].eval(x);
        }
        let i = self.pieces.partition_point(|p| p.comps[0].lo() <= x).max(1) - 1;
        Ok(self.pieces[i].comps[k].eval(x))
    }

    fn rhs(&self, fde: &HighOrderFDE, coeffs: &[T], x: &Float) -> Result<T> {
        let p = x.prec();
        let mut s = T::zero(p);
        for (t, a) in fde.terms.iter().zip(coeffs) {
            if a.magnitude().is_zero() {
                continue;
            }
            let v = self.eval(t.k, &Float::with_val(p, x * &t.alpha))?;
            s = s.add(&v.mul(a));
        }
        Ok(s)
    }
}

const MAX_DEGREE: usize = 128;
const MAX_BISECTIONS: usize = 20;

fn fit_rhs<T: Scalar>(f: &(dyn Fn(&Float) -> Result<T> + Sync), l: &Float, h: &Float, rel: f64, ctx: &PrecCtx) -> Result<Option<ChebInterpolant<T>>> {
    let p = ctx.bits();
    let mut degree = 16;
    loop {
        let mut fit = crate::numerics::cheb_fit(f, l, h, degree, ctx)?;
        let scale = fit.scale_bound();
        let n = fit.coeffs().len();
        let mut trailing = Float::new(p);
        for c in &fit.coeffs()[n - 3..] {
            trailing += c.magnitude();
        }
        let tol = Float::with_val(p, &scale * rel);
        if trailing <= tol || scale.is_zero() {
            fit.trim(&Float::with_val(p, &tol / 2u32));
            return Ok(Some(fit));
        }
        if degree >= MAX_DEGREE {
            return Ok(None);
        }
        degree *= 2;
    }
}

#[allow(clippy::too_many_arguments)]
fn build<T: Scalar>(
    fde: &HighOrderFDE,
    coeffs: &[T],
    view: &View<T>,
    l: &Float,
    h: &Float,
    start: &[T],
    start_err: &Float,
    a_sum: &Float,
    ctx: &PrecCtx,
    depth: usize,
) -> Result<Vec<HighOrderPiece<T>>> {
    let p = ctx.bits();
    let f = |x: &Float| view.rhs(fde, coeffs, x);
    let Some(r) = fit_rhs(&f, l, h, ctx.target() * 1e-2, ctx)? else {
        if depth >= MAX_BISECTIONS {
            return Err(Error::NonConvergence {
                what: "segment fit",
                iterations: depth,
                last: format!("[{}, {}]", l.to_f64(), h.to_f64()),
            });
        }
        let mid = Float::with_val(p, l + h) / 2u32;
        let mut left = build(fde, coeffs, view, l, &mid, start, start_err, a_sum, ctx, depth + 1)?;
        let last = left.last().unwrap();
        let s: Vec<T> = last.comps.iter().map(|c| c.eval(&mid)).collect();
        let e = last.err.clone();
        left.extend(build(fde, coeffs, view, &mid, h, &s, &e, a_sum, ctx, depth + 1)?);
        return Ok(left);
    };
    let len = Float::with_val(p, h - l);
    let m = fde.m;
    let mut comps: Vec<Option<ChebInterpolant<T>>> = vec![None; m];
    let mut upper = r;
    // largest error of earlier pieces feeds every delayed value
    let src_err = view.pieces.iter().map(|pc| pc.err.clone()).fold(Float::new(p), |a, b| a.max(&b));
    let mut e = Float::with_val(p, a_sum * &src_err);
    e += upper.tail_bound();
    let mut err = Float::new(p);
    for i in (0..m).rev() {
        let anti = upper.antiderivative();
        let mut c: Vec<T> = anti.coeffs().to_vec();
        c[0] = c[0].add(&start[i]);
        let mut ci = ChebInterpolant::from_coeffs(l.clone(), h.clone(), c)?;
        e *= &len;
        e += start_err;
        ci.set_tail_bound(e.clone());
        err = err.max(&e);
        upper = ci.clone();
        comps[i] = Some(ci);
    }
    let comps: Vec<ChebInterpolant<T>> = comps.into_iter().map(Option::unwrap).collect();
    let mut round = comps[0].scale_bound();
    round *= ctx.ulp();
    round *= 4u32 * comps[0].coeffs().len() as u32;
    err += round;
    Ok(vec![HighOrderPiece { comps, err }])
}

/// Method of steps on the mesh `x0 (1/alpha_max)^k`. `init[k]` holds
/// `y^(k)` on `[alpha_min x0, x0]`.
pub fn continue_high_order<T: Scalar>(
    fde: &HighOrderFDE,
    init: &[InitialFunction<T>],
    x_max: &Float,
    ctx: &PrecCtx,
) -> Result<HighOrderSolution<T>> {
    let p = ctx.bits();
    if fde.terms.iter().any(|t| !t.beta.is_zero()) {
        return Err(Error::UnsupportedBeta);
    }
    let (Some(amin), Some(amax)) = (fde.alpha_min(), fde.alpha_max()) else {
        return Err(Error::InvalidParameter("equation has no terms".into()));
    };
    if init.len() != fde.m {
        return Err(Error::InvalidParameter(format!(
            "need initial data for y .. y^({}), got {} functions",
            fde.m - 1,
            init.len()
        )));
    }
    let x0 = Float::with_val(p, init[0].x0());
    for f in init {
        let dl = Float::with_val(p, f.lambda() - amin).abs();
        let dx = Float::with_val(p, f.x0() - &x0).abs();
        if dl > Float::with_val(p, amin * 1e-25) || dx > Float::with_val(p, &x0 * 1e-25) {
            return Err(Error::InvalidParameter(format!(
                "initial data must live on [alpha_min x0, x0] = [{}, {}]",
                Float::with_val(p, amin * &x0).to_f64(),
                x0.to_f64()
            )));
        }
    }
    if !(*x_max > x0) {
        return Err(Error::InvalidParameter("X_max must exceed x0".into()));
    }
    let coeffs: Vec<T> = fde
        .terms
        .iter()
        .map(|t| T::try_from_complex(&Complex::with_val(p, &t.a)).ok_or(Error::NonReal))
        .collect::<Result<_>>()?;
    let mut a_sum = Float::new(p);
    for t in &fde.terms {
        a_sum += Float::with_val(p, t.a.abs_ref());
    }
    let ratio = Float::with_val(p, amax.recip_ref());

    let mut pieces: Vec<HighOrderPiece<T>> = Vec::new();
    let mut knots = vec![x0.clone()];
    let mut start: Vec<T> = init.iter().map(|f| f.eval(&x0)).collect::<Result<_>>()?;
    let mut start_err = Float::new(p);
    while *knots.last().unwrap() < *x_max {
        let l = knots.last().unwrap().clone();
        let h = Float::with_val(p, &l * &ratio);
        let view = View { init, pieces: &pieces };
        let new = build(fde, &coeffs, &view, &l, &h, &start, &start_err, &a_sum, ctx, 0)?;
        let last = new.last().unwrap();
        start = last.comps.iter().map(|c| c.eval(&h)).collect();
        start_err = last.err.clone();
        pieces.extend(new);
        knots.push(h);
    }
    let mut global = Float::new(p);
    for pc in &pieces {
        let s = pc.comps[0].scale_bound();
        if !s.is_zero() {
            global = global.max(&Float::with_val(p, &pc.err / &s));
        }
    }
    Ok(HighOrderSolution {
        fde: fde.clone(),
        coeffs,
        init: init.to_vec(),
        knots,
        pieces,
        global_err: global,
        ctx: *ctx,
    })
}

impl<T: Scalar> HighOrderSolution<T> {
    pub fn fde(&self) -> &HighOrderFDE {
        &self.fde
    }
    pub fn knots(&self) -> &[Float] {
        &self.knots
    }
    pub fn pieces(&self) -> &[HighOrderPiece<T>] {
        &self.pieces
    }
    pub fn global_err(&self) -> &Float {
        &self.global_err
    }
    pub fn ctx(&self) -> &PrecCtx {
        &self.ctx
    }
    pub fn domain(&self) -> (Float, Float) {
        (self.init[0].lo().clone(), self.knots.last().unwrap().clone())
    }
    pub fn x0(&self) -> &Float {
        &self.knots[0]
    }

    fn view(&self) -> View<'_, T> {
        View {
            init: &self.init,
            pieces: &self.pieces,
        }
    }

    /// `y^(k)(x)` for `k < m`.
    pub fn eval_component(&self, k: usize, x: &Float) -> Result<T> {
        let (lo, hi) = self.domain();
        if *x < lo || *x > hi || k >= self.fde.m {
            return Err(Error::OutOfDomain {
                x: x.to_f64(),
                lo: lo.to_f64(),
                hi: hi.to_f64(),
            });
        }
        self.view().eval(k, x)
    }

    pub fn eval(&self, x: &Float) -> Result<T> {
        self.eval_component(0, x)
    }

    /// `y'(x)`: the next component, or the right-hand side when `m = 1`.
    pub fn eval_derivative(&self, x: &Float) -> Result<T> {
        if self.fde.m > 1 {
            return self.eval_component(1, x);
        }
        self.eval_highest(x)
    }

    /// `y^(m)(x)` from the equation itself, `x >= x0`.
    pub fn eval_highest(&self, x: &Float) -> Result<T> {
        let (_, hi) = self.domain();
        if x < self.x0() || *x > hi {
            return Err(Error::OutOfDomain {
                x: x.to_f64(),
                lo: self.x0().to_f64(),
                hi: hi.to_f64(),
            });
        }
        self.view().rhs(&self.fde, &self.coeffs, x)
    }

    /// Residual `|d/dx y^(m-1) - rhs|` relative to the right-hand side scale.
    pub fn residual_check(&self, per_piece: usize) -> Result<ResidualReport> {
        let p = self.ctx.bits();
        let m = self.fde.m;
        let per_piece = per_piece.max(1);
        let worst = self
            .pieces
            .par_iter()
            .map(|pc| -> Result<(f64, f64)> {
                let d = pc.comps[m - 1].derivative();
                let lo = pc.comps[0].lo();
                let width = Float::with_val(p, pc.comps[0].hi() - lo);
                let scale = d.scale_bound().max(&pc.comps[m - 1].scale_bound()).max(&Float::with_val(p, 1e-300));
                let mut best = (0f64, lo.to_f64());
                for j in 0..per_piece {
                    let mut x = Float::with_val(p, &width * (2 * j + 1) as u32);
                    x /= (2 * per_piece) as u32;
                    x += lo;
                    let r = d.eval(&x).sub(&self.eval_highest(&x)?).magnitude();
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::PantographParams;
    use crate::solver::continue_solution;

    fn ctx() -> PrecCtx {
        PrecCtx::default()
    }

    #[test]
    fn second_order_residual() {
        let c = ctx();
        let half = c.real(0.5);
        let fde = HighOrderFDE::compressed(2, &[(0, 0, c.complex((1, 0)), half.clone())]).unwrap();
        let init = vec![
            InitialFunction::constant(&half, &c.real(1), c.real(1), &c).unwrap(),
            InitialFunction::constant(&half, &c.real(1), c.real(0), &c).unwrap(),
        ];
        let sol = continue_high_order(&fde, &init, &c.real(1024), &c).unwrap();
        let res = sol.residual_check(30).unwrap();
        assert!(res.max_rel <= 1e-15, "{res:?}");
        // y = 1 + (x-1)^2/2 on [1, 2]
        let y = sol.eval(&c.real(1.5)).unwrap();
        assert!((y.to_f64() - 1.125).abs() < 1e-30);
    }

    #[test]
    fn first_order_matches_pantograph_solver() {
        let c = ctx();
        let half = c.real(0.5);
        let fde = HighOrderFDE::compressed(1, &[(0, 0, c.complex((-1, 0)), half.clone())]).unwrap();
        let phi = InitialFunction::constant(&half, &c.real(1), c.real(1), &c).unwrap();
        let hi = continue_high_order(&fde, std::slice::from_ref(&phi), &c.real(30), &c).unwrap();
        let params = PantographParams::real(0.5, -1.0, 0.0, &c).unwrap();
        let lo = continue_solution(&params, &phi, &c.real(30), &c).unwrap();
        for x in [2.5, 17.0, 29.0] {
            let x = c.real(x);
            let d = Float::with_val(256, hi.eval(&x).unwrap() - lo.eval(&x).unwrap()).abs().to_f64();
            assert!(d < 1e-28, "{d:e}");
        }
    }

    #[test]
    fn zero_rhs_keeps_polynomial() {
        let c = ctx();
        let a = c.real(0.5);
        let fde = HighOrderFDE::compressed(3, &[(0, 1, c.complex((0, 0)), a.clone())]).unwrap();
        // y = 1 + 2x + 3x^2 around x0 = 1: values 6, 8, 6 at x0
        let lo = c.real(0.5);
        let init = vec![
            InitialFunction::pieces(&a, &c.real(1), vec![lo.clone(), c.real(1)], vec![vec![c.real(2.75), c.real(5), c.real(3)]], &c).unwrap(),
            InitialFunction::pieces(&a, &c.real(1), vec![lo.clone(), c.real(1)], vec![vec![c.real(5), c.real(6)]], &c).unwrap(),
            InitialFunction::constant(&a, &c.real(1), c.real(6), &c).unwrap(),
        ];
        let sol = continue_high_order(&fde, &init, &c.real(40), &c).unwrap();
        for x in [1.3, 9.0, 33.0] {
            let want = 1.0 + 2.0 * x + 3.0 * x * x;
            assert!((sol.eval(&c.real(x)).unwrap().to_f64() - want).abs() < 1e-25 * want);
        }
    }

    #[test]
    fn shifted_arguments_rejected() {
        let c = ctx();
        let t = HighOrderTerm {
            j: 0,
            k: 0,
            a: c.complex((1, 0)),
            alpha: c.real(0.5),
            beta: c.real(1),
        };
        let fde = HighOrderFDE::new(1, vec![t]).unwrap();
        let phi = InitialFunction::constant(&c.real(0.5), &c.real(1), c.real(1), &c).unwrap();
        assert_eq!(continue_high_order(&fde, &[phi], &c.real(4), &c).unwrap_err(), Error::UnsupportedBeta);
        assert!(HighOrderFDE::compressed(1, &[(0, 0, c.complex((1, 0)), c.real(1.5))]).is_err());
        assert!(HighOrderFDE::compressed(1, &[(0, 1, c.complex((1, 0)), c.real(0.5))]).is_err());
    }
}
