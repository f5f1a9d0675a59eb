use rayon::prelude::*;
use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{refine_root, PrecCtx};
use crate::zeros::fit::{lstsq, norm};
use crate::zeros::{enumerate_zeros, RealFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeModel {
    /// `c + gamma log^2(1+x)`.
    Plain,
    /// `c + beta log(1+x) + gamma log^2(1+x)`.
    PowerCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopePoints {
    /// Maxima of `|y|` between consecutive zeros.
    InterZeroMaxima,
    /// No sign change in range: `|y|` on a geometric grid.
    Sampled,
}

#[derive(Debug, Clone, Copy)]
pub struct EnvelopeOptions {
    pub model: EnvelopeModel,
    pub min_points: usize,
    /// Relative residual above which the log^2 model is declared wrong.
    pub reject_above: f64,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self {
            model: EnvelopeModel::PowerCorrected,
            min_points: 4,
            reject_above: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeFit {
    pub gamma_hat: f64,
    pub c_hat: f64,
    pub beta_hat: Option<f64>,
    pub model: EnvelopeModel,
    pub points: EnvelopePoints,
    pub x_range: [f64; 2],
    pub residual_norm: f64,
    /// Residual norm over the spread of `log|y|` about its mean.
    pub relative_residual: f64,
    pub rejected: bool,
    /// `(x, log|y|)` of the envelope points.
    pub data: Vec<[f64; 2]>,
}

pub fn envelope_fit(f: &dyn RealFunction, lo: &Float, hi: &Float, ctx: &PrecCtx) -> Result<EnvelopeFit> {
    envelope_fit_with(f, lo, hi, EnvelopeOptions::default(), ctx)
}

/// Largest `|y|` between two consecutive zeros: best of 33 samples, polished
/// by a root of `y'` when the neighbouring samples bracket one.
fn local_max(f: &dyn RealFunction, a: &Float, b: &Float, ctx: &PrecCtx) -> Result<(Float, Float)> {
    let p = ctx.bits();
    let w = Float::with_val(p, b - a);
    let xs: Vec<Float> = (1..32).map(|j| Float::with_val(p, &w * j) / 32u32 + a).collect();
    let vs: Vec<Float> = xs.par_iter().map(|x| f.eval(x).map(|v| v.abs())).collect::<Result<_>>()?;
    let i = (0..vs.len()).max_by(|&i, &j| vs[i].total_cmp(&vs[j])).unwrap();
    let (l, r) = (&xs[i.saturating_sub(1)], &xs[(i + 1).min(xs.len() - 1)]);
    let d = |x: &Float| f.deriv(x);
    let loose = ctx.with_target(1e-12)?;
    if let Ok(root) = refine_root(&d, None, l, r, &loose) {
        let v = f.eval(&root.root)?.abs();
        if v >= vs[i] {
            return Ok((root.root, v));
        }
    }
    Ok((xs[i].clone(), vs[i].clone()))
}

pub fn envelope_fit_with(f: &dyn RealFunction, lo: &Float, hi: &Float, opts: EnvelopeOptions, ctx: &PrecCtx) -> Result<EnvelopeFit> {
    let p = ctx.bits();
    let zeros = enumerate_zeros(f, lo, hi, usize::MAX, ctx)?;
    let (pts, kind): (Vec<(Float, Float)>, EnvelopePoints) = if zeros.is_empty() {
        let n = 64;
        let ratio = Float::with_val(p, hi / lo).ln() / n as u32;
        let xs: Vec<Float> = (0..=n).map(|j| Float::with_val(p, &ratio * j).exp() * lo).collect();
        let v = xs
            .par_iter()
            .map(|x| f.eval(x).map(|v| (x.clone(), v.abs())))
            .collect::<Result<Vec<_>>>()?;
        (v, EnvelopePoints::Sampled)
    } else {
        let v = zeros
            .par_windows(2)
            .map(|w| local_max(f, &w[0].x, &w[1].x, ctx))
            .collect::<Result<Vec<_>>>()?;
        (v, EnvelopePoints::InterZeroMaxima)
    };
    let need = match opts.model {
        EnvelopeModel::Plain => opts.min_points.max(3),
        EnvelopeModel::PowerCorrected => opts.min_points.max(4),
    };
    if pts.len() < need {
        return Err(Error::TooFewExtrema {
            found: pts.len(),
            needed: need,
        });
    }
    let data: Vec<[f64; 2]> = pts
        .iter()
        .map(|(x, v)| [x.to_f64(), Float::with_val(p, v.ln_ref()).to_f64()])
        .collect();
    let rows: Vec<Vec<f64>> = data
        .iter()
        .map(|d| {
            let l = d[0].ln_1p();
            match opts.model {
                EnvelopeModel::Plain => vec![1.0, l * l],
                EnvelopeModel::PowerCorrected => vec![1.0, l, l * l],
            }
        })
        .collect();
    let y: Vec<f64> = data.iter().map(|d| d[1]).collect();
    let (coef, res) = lstsq(&rows, &y).ok_or_else(|| Error::DegenerateFit("envelope design matrix is singular".into()))?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let spread = norm(&y.iter().map(|v| v - mean).collect::<Vec<_>>());
    let rn = norm(&res);
    let relative = if spread > 0.0 { rn / spread } else { 0.0 };
    let (gamma, beta) = match opts.model {
        EnvelopeModel::Plain => (coef[1], None),
        EnvelopeModel::PowerCorrected => (coef[2], Some(coef[1])),
    };
    Ok(EnvelopeFit {
        gamma_hat: gamma,
        c_hat: coef[0],
        beta_hat: beta,
        model: opts.model,
        points: kind,
        x_range: [lo.to_f64(), hi.to_f64()],
        residual_norm: rn,
        relative_residual: relative,
        rejected: relative > opts.reject_above,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::PantographParams;
    use crate::solver::{continue_high_order, continue_solution, HighOrderFDE, InitialFunction};
    use crate::zeros::AnalyticSolution;

    #[test]
    fn deformed_exponential_envelope() {
        let c = PrecCtx::with_bits(128).unwrap();
        let params = PantographParams::real(0.5, -1.0, 0.0, &c).unwrap();
        let f = AnalyticSolution::new(&params, &c).unwrap();
        let (lo, hi) = (c.real(3).exp(), c.real(10).exp());
        let fit = envelope_fit(&f, &lo, &hi, &c).unwrap();
        let want = 1.0 / (2.0 * 2f64.ln());
        assert!((fit.gamma_hat / want - 1.0).abs() <= 0.25, "{}", fit.gamma_hat);
        assert!(!fit.rejected);
        assert_eq!(fit.points, EnvelopePoints::InterZeroMaxima);
    }

    #[test]
    fn exponential_growth_rejects_log_square_model() {
        let c = PrecCtx::with_bits(128).unwrap();
        let params = PantographParams::real(0.5, 0.0, 1.0, &c).unwrap();
        let phi = InitialFunction::constant(&c.real(0.5), &c.real(1), c.real(1), &c).unwrap();
        let sol = continue_solution(&params, &phi, &c.real(400), &c).unwrap();
        let fit = envelope_fit_with(
            &sol,
            &c.real(2),
            &c.real(400),
            EnvelopeOptions {
                model: EnvelopeModel::Plain,
                ..Default::default()
            },
            &c,
        )
        .unwrap();
        assert_eq!(fit.points, EnvelopePoints::Sampled);
        assert!(fit.rejected, "{}", fit.relative_residual);
    }

    #[test]
    fn second_order_growth_and_scale_invariance() {
        let c = PrecCtx::with_bits(128).unwrap();
        let half = c.real(0.5);
        let fde = HighOrderFDE::compressed(2, &[(0, 0, c.complex((1, 0)), half.clone())]).unwrap();
        let run = |s: f64| {
            let init = vec![
                InitialFunction::constant(&half, &c.real(1), c.real(s), &c).unwrap(),
                InitialFunction::constant(&half, &c.real(1), c.real(0), &c).unwrap(),
            ];
            let sol = continue_high_order(&fde, &init, &c.real(4096), &c).unwrap();
            envelope_fit(&sol, &c.real(2), &c.real(4096), &c).unwrap()
        };
        let a = run(1.0);
        let b = run(-3.0);
        let lower = 1.0 / (2.0 * 2f64.ln());
        assert!(a.gamma_hat >= lower, "{}", a.gamma_hat);
        assert!((a.gamma_hat - b.gamma_hat).abs() < 1e-9);
        assert!((b.c_hat - a.c_hat - 3f64.ln()).abs() < 1e-9);
    }
}
