//! Empirical growth probes for `y^(m)(x) = sum a_jk y^(k)(alpha_j x)`.
//!
//! Everything here measures real-axis behaviour and reports it next to the
//! theoretical thresholds; none of it proves anything about the entire
//! functions involved.

mod envelope;

use rug::{Float, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::PrecCtx;
use crate::solver::HighOrderFDE;

pub use envelope::{envelope_fit, envelope_fit_with, EnvelopeFit, EnvelopeModel, EnvelopeOptions, EnvelopePoints};

#[derive(Debug, Clone, Serialize)]
pub struct GrowthBounds {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub m: usize,
    /// `m / (2 |log alpha_max|)`.
    pub upper_gamma_threshold: f64,
    /// `1 / (2 |log alpha_min|)`.
    pub lower_gamma_threshold: f64,
}

pub fn bounds(fde: &HighOrderFDE) -> Result<GrowthBounds> {
    let (Some(lo), Some(hi)) = (fde.alpha_min(), fde.alpha_max()) else {
        return Err(Error::InvalidParameter("equation has no terms".into()));
    };
    let lo = lo.to_f64().abs();
    let hi = hi.to_f64().abs();
    Ok(GrowthBounds {
        alpha_min: lo,
        alpha_max: hi,
        m: fde.m(),
        upper_gamma_threshold: fde.m() as f64 / (2.0 * hi.ln().abs()),
        lower_gamma_threshold: 1.0 / (2.0 * lo.ln().abs()),
    })
}

/// Default relative tolerance of the polynomial-solution detector.
pub const POLY_TOL: f64 = 1e-10;

/// Degrees `n <= n_max` with `|sum_j a_j0 alpha_j^n| <= tol sum_j |a_j0| alpha_j^n`,
/// the leading-order condition for a polynomial solution of degree `n`.
pub fn polynomial_solution_condition(fde: &HighOrderFDE, n_max: u32, ctx: &PrecCtx) -> Vec<u32> {
    polynomial_solution_condition_with(fde, n_max, POLY_TOL, ctx)
}

pub fn polynomial_solution_condition_with(fde: &HighOrderFDE, n_max: u32, tol: f64, ctx: &PrecCtx) -> Vec<u32> {
    let p = ctx.bits();
    let terms: Vec<_> = fde.terms().iter().filter(|t| t.k == 0).collect();
    if terms.is_empty() {
        return Vec::new();
    }
    (0..=n_max)
        .filter(|&n| {
            let mut sum = rug::Complex::new(p);
            let mut mass = Float::new(p);
            for t in &terms {
                let pw = Float::with_val(p, rug::ops::Pow::pow(&t.alpha, n));
                sum += rug::Complex::with_val(p, &t.a * &pw);
                mass += Float::with_val(p, t.a.abs_ref()) * &pw;
            }
            !mass.is_zero() && Float::with_val(p, sum.abs_ref()) <= mass * tol
        })
        .collect()
}

/// Exact version of the detector over rationals: `sum_j a_j alpha_j^n = 0`.
pub fn polynomial_condition_exact(a: &[Rational], alpha: &[Rational], n_max: u32) -> Vec<u32> {
    (0..=n_max)
        .filter(|&n| {
            let s: Rational = a
                .iter()
                .zip(alpha)
                .map(|(a, al)| a * Rational::from(rug::ops::Pow::pow(al, n as i32)))
                .sum();
            !a.is_empty() && s == 0
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeVerdict {
    pub gamma_hat: f64,
    pub thresholds: [f64; 2],
    /// One of `below-lower`, `between`, `above-upper`, `model-rejected`.
    pub verdict: String,
    pub fit: EnvelopeFit,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub kind: &'static str,
    pub bounds: GrowthBounds,
    pub detected_polynomial_degrees: Vec<u32>,
    pub envelope: Option<EnvelopeVerdict>,
}

pub fn classify(fit: &EnvelopeFit, b: &GrowthBounds) -> EnvelopeVerdict {
    let verdict = if fit.rejected {
        "model-rejected"
    } else if fit.gamma_hat < b.lower_gamma_threshold {
        "below-lower"
    } else if fit.gamma_hat > b.upper_gamma_threshold {
        "above-upper"
    } else {
        "between"
    };
    EnvelopeVerdict {
        gamma_hat: fit.gamma_hat,
        thresholds: [b.lower_gamma_threshold, b.upper_gamma_threshold],
        verdict: verdict.to_string(),
        fit: fit.clone(),
    }
}

/// Bounds, polynomial degrees up to `n_max` and, if given, an envelope verdict.
pub fn growth_report(fde: &HighOrderFDE, n_max: u32, fit: Option<&EnvelopeFit>, ctx: &PrecCtx) -> Result<GrowthReport> {
    let b = bounds(fde)?;
    Ok(GrowthReport {
        kind: "empirical probe",
        detected_polynomial_degrees: polynomial_solution_condition(fde, n_max, ctx),
        envelope: fit.map(|f| classify(f, &b)),
        bounds: b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fde(c: &PrecCtx, terms: &[(f64, f64)], m: usize) -> HighOrderFDE {
        let t: Vec<_> = terms
            .iter()
            .enumerate()
            .map(|(j, &(a, al))| (j, 0, c.complex((a, 0)), c.real(al)))
            .collect();
        HighOrderFDE::compressed(m, &t).unwrap()
    }

    #[test]
    fn thresholds() {
        let c = PrecCtx::default();
        let b = bounds(&fde(&c, &[(1.0, 0.5)], 1)).unwrap();
        let t = 1.0 / (2.0 * 2f64.ln());
        assert!((b.lower_gamma_threshold - t).abs() < 1e-15 && (b.upper_gamma_threshold - t).abs() < 1e-15);
        let b = bounds(&fde(&c, &[(1.0, 0.3), (1.0, 0.7)], 2)).unwrap();
        assert!((b.upper_gamma_threshold - 2.0 / (2.0 * 0.7f64.ln().abs())).abs() < 1e-12);
        assert!((b.lower_gamma_threshold - 1.0 / (2.0 * 0.3f64.ln().abs())).abs() < 1e-12);
        assert!(bounds(&HighOrderFDE::new(1, vec![]).unwrap()).is_err());
    }

    #[test]
    fn polynomial_detector() {
        let c = PrecCtx::default();
        assert!(polynomial_solution_condition(&fde(&c, &[(-1.0, 0.5)], 1), 40, &c).is_empty());
        assert_eq!(polynomial_solution_condition(&fde(&c, &[(1.0, 0.5), (-2.0, 0.25)], 1), 40, &c), vec![1]);
        assert!(polynomial_solution_condition(&fde(&c, &[(1.0 + 1e-3, 0.5), (-2.0, 0.25)], 1), 40, &c).is_empty());
        // scale invariance
        assert_eq!(polynomial_solution_condition(&fde(&c, &[(-7.0, 0.5), (14.0, 0.25)], 1), 40, &c), vec![1]);
        let r = |n: i32, d: u32| Rational::from((n, d));
        assert_eq!(polynomial_condition_exact(&[r(1, 1), r(-2, 1)], &[r(1, 2), r(1, 4)], 40), vec![1]);
        assert_eq!(polynomial_condition_exact(&[r(1, 1), r(-4, 1)], &[r(2, 3), r(1, 3)], 10), vec![2]);
    }
}
