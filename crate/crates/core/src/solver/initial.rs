//! Initial functions on `[lambda x0, x0]`.
//!
//! JSON layout (numbers may be JSON numbers, decimal strings for full
//! precision, or `{"re": .., "im": ..}` / `[re, im]` for complex values):
//!
//! ```text
//! {"x0": 1, "kind": "pieces", "breaks": [0.5, 0.75, 1], "coeffs": [[1, -2], [0.5, 0, 3]]}
//! {"x0": 1, "kind": "table", "x": [0.5, 0.6, ..., 1], "y": [..], "interp": "linear" | "spline"}
//! {"x0": 1, "kind": "analytic", "a": -1, "b": 0}
//! ```
//!
//! `pieces`: piece `i` on `[breaks[i], breaks[i+1]]` is the polynomial
//! `sum_j coeffs[i][j] (x - breaks[i])^j`. `breaks` must run from `lambda x0`
//! to `x0`. `table`: samples covering exactly `[lambda x0, x0]`, joined
//! linearly or by a natural cubic spline. `analytic`: restriction of the
//! entire solution of `y' = a y(lambda x) + b y(x)` with `y(0) = 1`.

use rand::Rng;
use rug::{Complex, Float};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::numerics::{PrecCtx, Scalar};
use crate::series::{check_lambda, pantograph_eval_direct, with_precision_retry, PantographParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    Linear,
    Spline,
}

#[derive(Debug, Clone)]
enum Repr<T: Scalar> {
    Pieces(Vec<Vec<T>>),
    Table { ys: Vec<T>, second: Option<Vec<T>> },
    Analytic(PantographParams),
}

/// Relative tolerance for jumps at piece joints.
pub const JOINT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct InitialFunction<T: Scalar> {
    lambda: Float,
    x0: Float,
    /// Points where the function may fail to be smooth, from `lambda x0` to `x0`.
    breaks: Vec<Float>,
    repr: Repr<T>,
}

fn snap_domain(breaks: &mut [Float], lambda: &Float, x0: &Float) -> Result<()> {
    let p = x0.prec();
    let lo = Float::with_val(p, lambda * x0);
    let tol = Float::with_val(p, x0 * 1e-12);
    let n = breaks.len();
    let first_ok = Float::with_val(p, &breaks[0] - &lo).abs() <= tol;
    let last_ok = Float::with_val(p, &breaks[n - 1] - x0).abs() <= tol;
    if !first_ok || !last_ok {
        return Err(Error::InvalidParameter(format!(
            "initial data must cover exactly [{}, {}], got [{}, {}]",
            lo.to_f64(),
            x0.to_f64(),
            breaks[0].to_f64(),
            breaks[n - 1].to_f64()
        )));
    }
    breaks[0] = lo;
    breaks[n - 1] = x0.clone();
    if breaks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("break points must be strictly increasing".into()));
    }
    Ok(())
}

fn check_x0(x0: &Float) -> Result<()> {
    if !(x0.is_finite() && *x0 > 0) {
        return Err(Error::InvalidParameter(format!("x0 must be positive, got {}", x0.to_f64())));
    }
    Ok(())
}

fn horner<T: Scalar>(c: &[T], t: &Float) -> T {
    let mut acc = T::zero(t.prec());
    for ck in c.iter().rev() {
        acc = acc.mul_real(t).add(ck);
    }
    acc
}

/// Second derivatives of the natural cubic spline through `(xs, ys)`.
fn natural_spline<T: Scalar>(xs: &[Float], ys: &[T]) -> Vec<T> {
    let n = xs.len();
    let p = xs[0].prec();
    let mut m = vec![T::zero(p); n];
    if n < 3 {
        return m;
    }
    let h: Vec<Float> = xs.windows(2).map(|w| Float::with_val(p, &w[1] - &w[0])).collect();
    // Thomas algorithm on the interior unknowns
    let mut diag: Vec<Float> = Vec::with_capacity(n);
    let mut rhs: Vec<T> = Vec::with_capacity(n);
    for i in 1..n - 1 {
        let d = Float::with_val(p, &h[i - 1] + &h[i]) * 2u32;
        let s1 = ys[i + 1].sub(&ys[i]).mul_real(&Float::with_val(p, h[i].recip_ref()));
        let s0 = ys[i].sub(&ys[i - 1]).mul_real(&Float::with_val(p, h[i - 1].recip_ref()));
        diag.push(d);
        rhs.push(s1.sub(&s0).mul_real(&Float::with_val(p, 6u32)));
    }
    let k = diag.len();
    for i in 1..k {
        let w = Float::with_val(p, &h[i] / &diag[i - 1]);
        let sub = Float::with_val(p, &w * &h[i]);
        diag[i] -= sub;
        let r = rhs[i - 1].mul_real(&w);
        rhs[i] = rhs[i].sub(&r);
    }
    let mut sol = vec![T::zero(p); k];
    sol[k - 1] = rhs[k - 1].mul_real(&Float::with_val(p, diag[k - 1].recip_ref()));
    for i in (0..k - 1).rev() {
        let t = rhs[i].sub(&sol[i + 1].mul_real(&h[i + 1]));
        sol[i] = t.mul_real(&Float::with_val(p, diag[i].recip_ref()));
    }
    m[1..n - 1].clone_from_slice(&sol);
    m
}

impl<T: Scalar> InitialFunction<T> {
    /// Piecewise polynomials; coefficients of piece `i` are in powers of `x - breaks[i]`.
    pub fn pieces(lambda: &Float, x0: &Float, mut breaks: Vec<Float>, coeffs: Vec<Vec<T>>, ctx: &PrecCtx) -> Result<Self> {
        check_lambda(lambda)?;
        check_x0(x0)?;
        if breaks.len() < 2 || coeffs.len() != breaks.len() - 1 || coeffs.iter().any(|c| c.is_empty()) {
            return Err(Error::InvalidParameter("pieces need n+1 break points and n non-empty coefficient lists".into()));
        }
        let p = ctx.bits();
        breaks.iter_mut().for_each(|b| b.set_prec(p));
        snap_domain(&mut breaks, &Float::with_val(p, lambda), &Float::with_val(p, x0))?;
        let f = Self {
            lambda: Float::with_val(p, lambda),
            x0: Float::with_val(p, x0),
            breaks,
            repr: Repr::Pieces(coeffs),
        };
        f.check_joints()?;
        Ok(f)
    }

    /// Constant function on the whole initial interval.
    pub fn constant(lambda: &Float, x0: &Float, value: T, ctx: &PrecCtx) -> Result<Self> {
        let lo = Float::with_val(ctx.bits(), lambda * x0);
        Self::pieces(lambda, x0, vec![lo, Float::with_val(ctx.bits(), x0)], vec![vec![value]], ctx)
    }

    /// Tabulated samples; `xs` must start at `lambda x0` and end at `x0`.
    pub fn table(lambda: &Float, x0: &Float, mut xs: Vec<Float>, ys: Vec<T>, interp: Interp, ctx: &PrecCtx) -> Result<Self> {
        check_lambda(lambda)?;
        check_x0(x0)?;
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::InvalidParameter("table needs at least two (x, y) samples of equal length".into()));
        }
        let p = ctx.bits();
        xs.iter_mut().for_each(|b| b.set_prec(p));
        snap_domain(&mut xs, &Float::with_val(p, lambda), &Float::with_val(p, x0))?;
        let second = (interp == Interp::Spline).then(|| natural_spline(&xs, &ys));
        Ok(Self {
            lambda: Float::with_val(p, lambda),
            x0: Float::with_val(p, x0),
            breaks: xs,
            repr: Repr::Table { ys, second },
        })
    }

    /// Restriction of the entire solution with `y(0) = 1`.
    pub fn analytic(params: &PantographParams, x0: &Float, ctx: &PrecCtx) -> Result<Self> {
        check_x0(x0)?;
        let p = ctx.bits();
        if T::try_from_complex(&ctx.complex((0, 1))).is_none() && !params.is_real() {
            return Err(Error::NonReal);
        }
        let x0 = Float::with_val(p, x0);
        let lo = Float::with_val(p, params.lambda() * &x0);
        Ok(Self {
            lambda: params.lambda().clone(),
            x0: x0.clone(),
            breaks: vec![lo, x0],
            repr: Repr::Analytic(params.clone()),
        })
    }

    pub fn lambda(&self) -> &Float {
        &self.lambda
    }
    pub fn x0(&self) -> &Float {
        &self.x0
    }
    pub fn lo(&self) -> &Float {
        &self.breaks[0]
    }
    /// Break points, including both ends of the domain.
    pub fn breaks(&self) -> &[Float] {
        &self.breaks
    }

    pub(crate) fn piece_index(&self, x: &Float) -> usize {
        let k = self.breaks.partition_point(|b| b <= x);
        k.clamp(1, self.breaks.len() - 1) - 1
    }

    fn eval_piece(&self, i: usize, x: &Float) -> Result<T> {
        let p = self.x0.prec();
        match &self.repr {
            Repr::Pieces(c) => {
                let t = Float::with_val(p, x - &self.breaks[i]);
                Ok(horner(&c[i], &t))
            }
            Repr::Table { ys, second } => {
                let (x0, x1) = (&self.breaks[i], &self.breaks[i + 1]);
                let h = Float::with_val(p, x1 - x0);
                let a = Float::with_val(p, x1 - x) / &h;
                let b = Float::with_val(p, x - x0) / &h;
                let mut v = ys[i].mul_real(&a).add(&ys[i + 1].mul_real(&b));
                if let Some(m) = second {
                    // + ((a^3 - a) M_i + (b^3 - b) M_{i+1}) h^2 / 6
                    let h2 = Float::with_val(p, h.square_ref()) / 6u32;
                    let ca = Float::with_val(p, a.square_ref()) * &a - &a;
                    let cb = Float::with_val(p, b.square_ref()) * &b - &b;
                    let corr = m[i].mul_real(&ca).add(&m[i + 1].mul_real(&cb)).mul_real(&h2);
                    v = v.add(&corr);
                }
                Ok(v)
            }
            Repr::Analytic(params) => {
                let ctx = PrecCtx::new(p, 2f64.powi(-(p as i32) + 8).max(1e-300))?;
                let z = Complex::with_val(p, (x, 0));
                let v = with_precision_retry(&ctx, |c| pantograph_eval_direct(params, &z, c))?;
                T::try_from_complex(&Complex::with_val(p, &v.value)).ok_or(Error::NonReal)
            }
        }
    }

    /// Value at `x` in `[lambda x0, x0]`.
    pub fn eval(&self, x: &Float) -> Result<T> {
        let lo = self.lo();
        let slack = Float::with_val(self.x0.prec(), &self.x0 * 1e-25);
        if *x < Float::with_val(lo.prec(), lo - &slack) || *x > Float::with_val(lo.prec(), &self.x0 + &slack) {
            return Err(Error::OutOfDomain {
                x: x.to_f64(),
                lo: lo.to_f64(),
                hi: self.x0.to_f64(),
            });
        }
        self.eval_piece(self.piece_index(x), x)
    }

    /// Evaluate inside piece `i`, also slightly beyond its ends.
    pub(crate) fn eval_in_piece(&self, i: usize, x: &Float) -> Result<T> {
        self.eval_piece(i, x)
    }

    fn check_joints(&self) -> Result<()> {
        let n = self.breaks.len();
        for i in 1..n - 1 {
            let x = &self.breaks[i];
            let l = self.eval_piece(i - 1, x)?;
            let r = self.eval_piece(i, x)?;
            let jump = l.sub(&r).magnitude();
            let scale = l.magnitude().max(&r.magnitude()).max(&Float::with_val(x.prec(), 1));
            if jump > Float::with_val(x.prec(), &scale * JOINT_TOL) {
                return Err(Error::DiscontinuousInitial {
                    x: x.to_f64(),
                    jump: jump.to_f64(),
                });
            }
        }
        Ok(())
    }

    /// Parse the JSON layout described in the module docs.
    pub fn from_json(text: &str, lambda: &Float, ctx: &PrecCtx) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let x0 = json_real(v.get("x0").ok_or_else(|| Error::Parse("missing \"x0\"".into()))?, ctx)?;
        let kind = v.get("kind").and_then(Value::as_str).ok_or_else(|| Error::Parse("missing \"kind\"".into()))?;
        let scalar = |v: &Value| -> Result<T> { T::try_from_complex(&json_complex(v, ctx)?).ok_or(Error::NonReal) };
        let list = |key: &str| -> Result<&Vec<Value>> {
            v.get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Parse(format!("missing array \"{key}\"")))
        };
        match kind {
            "pieces" => {
                let breaks = list("breaks")?.iter().map(|b| json_real(b, ctx)).collect::<Result<Vec<_>>>()?;
                let coeffs = list("coeffs")?
                    .iter()
                    .map(|row| {
                        row.as_array()
                            .ok_or_else(|| Error::Parse("coeffs must be a list of lists".into()))?
                            .iter()
                            .map(scalar)
                            .collect::<Result<Vec<T>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::pieces(lambda, &x0, breaks, coeffs, ctx)
            }
            "table" => {
                let xs = list("x")?.iter().map(|b| json_real(b, ctx)).collect::<Result<Vec<_>>>()?;
                let ys = list("y")?.iter().map(scalar).collect::<Result<Vec<_>>>()?;
                let interp = match v.get("interp").and_then(Value::as_str).unwrap_or("linear") {
                    "linear" => Interp::Linear,
                    "spline" => Interp::Spline,
                    other => return Err(Error::Parse(format!("unknown interp \"{other}\""))),
                };
                Self::table(lambda, &x0, xs, ys, interp, ctx)
            }
            "analytic" => {
                let a = v.get("a").map(|a| json_complex(a, ctx)).transpose()?.unwrap_or(ctx.complex((-1, 0)));
                let b = v.get("b").map(|b| json_complex(b, ctx)).transpose()?.unwrap_or(ctx.complex((0, 0)));
                let params = PantographParams::new(lambda, &a, &b, ctx)?;
                Self::analytic(&params, &x0, ctx)
            }
            other => Err(Error::Parse(format!("unknown kind \"{other}\""))),
        }
    }
}

impl InitialFunction<Float> {
    /// Continuous piecewise-linear function with `n_pieces` random pieces and
    /// values uniform in [-1, 1] at the break points.
    pub fn random_piecewise_linear<R: Rng>(lambda: &Float, x0: &Float, n_pieces: usize, rng: &mut R, ctx: &PrecCtx) -> Result<Self> {
        if n_pieces == 0 {
            return Err(Error::InvalidParameter("need at least one piece".into()));
        }
        let p = ctx.bits();
        let lo = Float::with_val(p, lambda * x0);
        let width = Float::with_val(p, x0 - &lo);
        let mut inner: Vec<f64> = (0..n_pieces - 1).map(|_| rng.random_range(0.05..0.95)).collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        let mut breaks = vec![lo.clone()];
        breaks.extend(inner.iter().map(|&u| Float::with_val(p, &width * u) + &lo));
        breaks.push(Float::with_val(p, x0));
        let ys: Vec<Float> = breaks.iter().map(|_| Float::with_val(p, rng.random_range(-1.0..1.0))).collect();
        Self::table(lambda, x0, breaks, ys, Interp::Linear, ctx)
    }
}

fn json_real(v: &Value, ctx: &PrecCtx) -> Result<Float> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .map(|f| ctx.real(f))
            .ok_or_else(|| Error::Parse(format!("bad number {n}"))),
        Value::String(s) => ctx.parse(s),
        other => Err(Error::Parse(format!("expected a real number, got {other}"))),
    }
}

fn json_complex(v: &Value, ctx: &PrecCtx) -> Result<Complex> {
    match v {
        Value::Object(m) => {
            let re = m.get("re").map(|x| json_real(x, ctx)).transpose()?.unwrap_or(ctx.zero());
            let im = m.get("im").map(|x| json_real(x, ctx)).transpose()?.unwrap_or(ctx.zero());
            Ok(Complex::with_val(ctx.bits(), (re, im)))
        }
        Value::Array(a) if a.len() == 2 => Ok(Complex::with_val(ctx.bits(), (json_real(&a[0], ctx)?, json_real(&a[1], ctx)?))),
        other => Ok(Complex::with_val(ctx.bits(), (json_real(other, ctx)?, 0))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn ctx() -> PrecCtx {
        PrecCtx::default()
    }

    #[test]
    fn pieces_from_json_and_joint_check() {
        let c = ctx();
        let half = c.real(0.5);
        let ok = r#"{"x0": 1, "kind": "pieces", "breaks": [0.5, 0.75, 1], "coeffs": [[1, 2], [1.5, -4]]}"#;
        let f = InitialFunction::<Float>::from_json(ok, &half, &c).unwrap();
        assert_eq!(f.eval(&c.real(0.625)).unwrap(), 1.25);
        assert_eq!(f.eval(&c.real(1)).unwrap(), 0.5);
        let bad = r#"{"x0": 1, "kind": "pieces", "breaks": [0.5, 0.75, 1], "coeffs": [[1, 2], [2, 0]]}"#;
        assert!(matches!(
            InitialFunction::<Float>::from_json(bad, &half, &c),
            Err(Error::DiscontinuousInitial { .. })
        ));
    }

    #[test]
    fn domain_must_match_lambda() {
        let c = ctx();
        let j = r#"{"x0": 1, "kind": "table", "x": [0.4, 1], "y": [0, 1]}"#;
        assert!(matches!(
            InitialFunction::<Float>::from_json(j, &c.real(0.5), &c),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn spline_reproduces_cubic_interior_and_hits_knots() {
        let c = ctx();
        let xs: Vec<Float> = (0..=10).map(|i| c.real(0.5) + c.real(i) / 20u32).collect();
        let ys: Vec<Float> = xs.iter().map(|x| Float::with_val(256, x.sin_ref())).collect();
        let f = InitialFunction::table(&c.real(0.5), &c.real(1), xs.clone(), ys.clone(), Interp::Spline, &c).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!(Float::with_val(256, f.eval(x).unwrap() - y).abs().to_f64() < 1e-60);
        }
        let x = c.real(0.77);
        let err = Float::with_val(256, f.eval(&x).unwrap() - x.clone().sin()).abs().to_f64();
        assert!(err < 1e-5, "{err:e}");
    }

    #[test]
    fn complex_table_rejected_as_real() {
        let c = ctx();
        let j = r#"{"x0": 1, "kind": "table", "x": [0.5, 1], "y": [{"re": 1, "im": 1}, 0]}"#;
        assert_eq!(InitialFunction::<Float>::from_json(j, &c.real(0.5), &c).unwrap_err(), Error::NonReal);
        let f = InitialFunction::<Complex>::from_json(j, &c.real(0.5), &c).unwrap();
        assert_eq!(f.eval(&c.real(0.75)).unwrap(), Complex::with_val(256, (0.5, 0.5)));
    }

    #[test]
    fn analytic_restriction_matches_series() {
        let c = ctx();
        let j = r#"{"x0": 1, "kind": "analytic", "a": -1, "b": 0}"#;
        let f = InitialFunction::<Float>::from_json(j, &c.real(0.5), &c).unwrap();
        let g = crate::series::deformed_exp_real(&c.real(0.5), &c.real(0.8), 256).unwrap();
        assert!(Float::with_val(256, f.eval(&c.real(0.8)).unwrap() - &g.value).abs().to_f64() < 1e-70);
        assert!(f.eval(&c.real(1.5)).is_err());
    }

    #[test]
    fn random_generator_is_seeded_and_continuous() {
        let c = ctx();
        let mut r1 = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut r2 = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let f = InitialFunction::random_piecewise_linear(&c.real(0.5), &c.real(1), 6, &mut r1, &c).unwrap();
        let g = InitialFunction::random_piecewise_linear(&c.real(0.5), &c.real(1), 6, &mut r2, &c).unwrap();
        assert_eq!(f.breaks().len(), 7);
        for x in [0.5, 0.61, 0.99] {
            assert_eq!(f.eval(&c.real(x)).unwrap(), g.eval(&c.real(x)).unwrap());
        }
    }
}
