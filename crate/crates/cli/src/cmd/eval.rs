use clap::{Args, ValueEnum};
use pantolab::asymptotics::{asy_neg_with, asy_pos_with, hankel_contour_eval, kato_mcleod_envelope, AsyOptions, AsyOrder, ContourForm};
use pantolab::series::{
    multipantograph_eval, pantograph_eval_direct, pantograph_eval_truncated, MultiPantographParams, PantographParams, TruncOptions,
};
use pantolab::{Complex, Float, PrecCtx};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::cmd::source::params;
use crate::cmd::Outcome;
use crate::config::{de, parse_complex, parse_real, Resolved};
use crate::fail::CliError;
use crate::output::{Artifact, Cell};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Series,
    Contour,
    Asy,
    KmEnvelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    Leading,
    Refined,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalArgs {
    /// Evaluator [default: series].
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Evaluation point, repeatable: 1, -3, 5+2i.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(deserialize_with = "de::strings")]
    pub z: Option<Vec<String>>,
    /// Real grid `lo:hi:n` of n points.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Compare with an independent evaluator and report max_rel_dev.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub crosscheck: Option<bool>,
    /// Largest accepted max_rel_dev [default depends on the method].
    #[arg(long)]
    pub crosscheck_tol: Option<f64>,
    /// Order of the saddle-point approximation [default: leading].
    #[arg(long, value_enum)]
    pub asy_order: Option<Order>,
}

/// The evaluator a method is checked against.
fn reference(method: Method, b_zero: bool) -> Option<(Method, &'static str, f64)> {
    match method {
        Method::Series if b_zero => Some((Method::Contour, "contour", 1e-15)),
        Method::Series => Some((Method::Series, "truncated-expansion", 1e-20)),
        Method::Contour => Some((Method::Series, "series", 1e-15)),
        Method::Asy => Some((Method::Series, "series", 0.05)),
        Method::KmEnvelope => None,
    }
}

fn grid_points(spec: &str, ctx: &PrecCtx) -> Result<Vec<Complex>, CliError> {
    let bad = || CliError::input(format!("grid \"{spec}\" is not lo:hi:n"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err(bad());
    };
    let lo = parse_real(lo, ctx)?;
    let hi = parse_real(hi, ctx)?;
    let n: u32 = n.trim().parse().map_err(|_| bad())?;
    let p = ctx.bits();
    Ok(match n {
        0 => Vec::new(),
        1 => vec![Complex::with_val(p, (&lo, 0))],
        _ => (0..n)
            .map(|j| {
                let x = Float::with_val(p, &hi - &lo) * j / (n - 1) + &lo;
                Complex::with_val(p, (x, 0))
            })
            .collect(),
    })
}

struct Evaluator<'a> {
    r: &'a Resolved,
    params: PantographParams,
    multi: Option<MultiPantographParams>,
    order: AsyOrder,
}

impl Evaluator<'_> {
    fn deformed_arg(&self, method: &str) -> Result<Complex, CliError> {
        if !self.params.b().is_zero() || self.multi.is_some() {
            return Err(CliError::input(format!(
                "{method} method covers y' = a y(lambda z) only (b = 0)"
            )));
        }
        Ok(-self.params.a().clone())
    }

    /// Value and absolute error estimate, where one is known.
    fn eval(&self, method: Method, z: &Complex, truncated: bool) -> Result<(Complex, Option<f64>), CliError> {
        let ctx = &self.r.ctx;
        let p = ctx.bits();
        let lam = self.params.lambda();
        match method {
            Method::Series if truncated => {
                let t = pantograph_eval_truncated(&self.params, z, TruncOptions::default(), ctx)?;
                Ok((t.value.value, Some(t.value.tail_bound.to_f64())))
            }
            Method::Series => {
                let s = match &self.multi {
                    Some(m) => multipantograph_eval(m, z, ctx)?,
                    None => pantograph_eval_direct(&self.params, z, ctx)?,
                };
                Ok((s.value, Some(s.tail_bound.to_f64())))
            }
            Method::Contour => {
                let w = Complex::with_val(p, &self.deformed_arg("contour")? * z);
                if w.is_zero() {
                    return Ok((Complex::with_val(p, (1, 0)), Some(0.0)));
                }
                let v = if w.real().is_sign_negative() {
                    hankel_contour_eval(&Complex::with_val(p, -&w), lam, ContourForm::Reflected, ctx)?
                } else {
                    hankel_contour_eval(&w, lam, ContourForm::Direct, ctx)?
                };
                Ok((v, None))
            }
            Method::Asy => {
                let w = Complex::with_val(p, &self.deformed_arg("asy")? * z);
                let opts = AsyOptions {
                    order: self.order,
                    ..AsyOptions::default()
                };
                let v = if w.real().is_sign_negative() {
                    asy_neg_with(&Complex::with_val(p, -&w), lam, &opts, ctx)?
                } else {
                    asy_pos_with(&w, lam, &opts, ctx)?
                };
                Ok((v, None))
            }
            Method::KmEnvelope => {
                if !z.imag().is_zero() {
                    return Err(CliError::input("km-envelope is defined on the positive real axis"));
                }
                let v = kato_mcleod_envelope(z.real(), &self.params, ctx)?;
                Ok((Complex::with_val(p, (v, 0)), None))
            }
        }
    }
}

fn rel_dev(v: &Complex, reference: &Complex) -> f64 {
    let p = v.prec().0;
    let d = Float::with_val(p, Complex::with_val(p, v - reference).abs_ref());
    let s = Float::with_val(p, reference.abs_ref());
    if s.is_zero() {
        return if d.is_zero() { 0.0 } else { f64::INFINITY };
    }
    (d / s).to_f64()
}

pub fn run(r: &Resolved, mut args: EvalArgs, mut config: Map<String, Value>) -> Result<Outcome, CliError> {
    let ctx = &r.ctx;
    let method = *args.method.get_or_insert(Method::Series);
    let order = match *args.asy_order.get_or_insert(Order::Leading) {
        Order::Leading => AsyOrder::Leading,
        Order::Refined => AsyOrder::Refined,
    };
    let crosscheck = *args.crosscheck.get_or_insert(false);

    let mut points = Vec::new();
    for s in args.z.iter().flatten() {
        points.push(parse_complex(s, ctx)?);
    }
    if let Some(g) = &args.grid {
        points.extend(grid_points(g, ctx)?);
    }
    if args.z.is_none() && args.grid.is_none() {
        return Err(CliError::input("no evaluation points: give --z or --grid"));
    }

    let params = params(r)?;
    let multi = match (&r.common.lambdas, &r.common.a_list) {
        (None, None) => None,
        (Some(ls), Some(as_)) => {
            if method != Method::Series {
                return Err(CliError::input("multi-pantograph equations are evaluated by the series method only"));
            }
            let ls = ls.iter().map(|s| parse_real(s, ctx)).collect::<Result<Vec<_>, _>>()?;
            let as_ = as_.iter().map(|s| parse_complex(s, ctx)).collect::<Result<Vec<_>, _>>()?;
            Some(MultiPantographParams::new(&ls, &as_, &r.b, ctx)?)
        }
        _ => return Err(CliError::input("--lambdas and --a-list go together")),
    };
    let b_zero = params.b().is_zero();
    let ev = Evaluator { r, params, multi, order };

    let check = if crosscheck {
        if ev.multi.is_some() {
            return Err(CliError::input("no independent evaluator for multi-pantograph equations"));
        }
        let Some((m, name, tol)) = reference(method, b_zero) else {
            return Err(CliError::input("km-envelope is a bound, not a value; nothing to cross-check"));
        };
        let tol = *args.crosscheck_tol.get_or_insert(tol);
        Some((m, name, tol))
    } else {
        None
    };

    let rows = points
        .par_iter()
        .map(|z| -> Result<_, CliError> {
            let (v, err) = ev.eval(method, z, false)?;
            let refv = match check {
                Some((m, _, _)) => Some(ev.eval(m, z, method == Method::Series && !b_zero)?.0),
                None => None,
            };
            Ok((z, v, err, refv))
        })
        .collect::<Result<Vec<_>, _>>()?;

    config.extend(crate::config::echo(&args));
    let mut cols = vec!["z_re", "z_im", "value_re", "value_im", "est_error"];
    if check.is_some() {
        cols.extend(["ref_re", "ref_im", "rel_dev"]);
    }
    let mut art = Artifact::new("eval", config, &cols);
    let mut max_dev = 0f64;
    for (z, v, err, refv) in rows {
        let mut row: Vec<Cell> = vec![
            z.real().to_f64().into(),
            z.imag().to_f64().into(),
            v.real().to_f64().into(),
            v.imag().to_f64().into(),
            err.into(),
        ];
        if let Some(rv) = refv {
            let d = rel_dev(&v, &rv);
            max_dev = max_dev.max(d);
            row.extend([rv.real().to_f64().into(), rv.imag().to_f64().into(), d.into()]);
        }
        art.push(row);
    }
    let mut summary = json!({ "method": method, "points": art.rows.len() });
    let mut pass = true;
    if let Some((_, name, tol)) = check {
        pass = max_dev <= tol;
        summary["crosscheck"] = json!({ "reference": name, "max_rel_dev": max_dev, "tolerance": tol, "pass": pass });
    }
    art.section("summary", summary);
    Ok(Outcome { artifact: art, pass })
}
