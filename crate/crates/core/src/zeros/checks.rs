//! Asymptotic laws for the zero sequence.

use rug::Float;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::numerics::PrecCtx;
use crate::zeros::divisor::divisor_gf;
use crate::zeros::enumerate::ZeroRecord;
use crate::zeros::fit::{kendall_tau, lstsq, norm};
use crate::zeros::report::CheckReport;

/// Offsets tried for the index shift `k0`.
pub const OFFSET_WINDOW: std::ops::RangeInclusive<usize> = 0..=8;

fn to_f64s(zeros: &[ZeroRecord]) -> Vec<(usize, f64)> {
    zeros.iter().map(|z| (z.n, z.x.to_f64())).collect()
}

fn check_increasing(zeros: &[ZeroRecord]) -> Result<()> {
    if zeros.windows(2).any(|w| !(w[0].x < w[1].x)) {
        return Err(Error::InvalidParameter("zeros are not strictly increasing".into()));
    }
    Ok(())
}

/// `r_n = x_{n+1} / x_n` and `|r_n lambda - 1|`; passes when the last
/// deviation is below `tol` and below the first.
pub fn ratio_check(zeros: &[ZeroRecord], q: f64) -> Result<CheckReport> {
    ratio_check_with(zeros, q, 0.1)
}

pub fn ratio_check_with(zeros: &[ZeroRecord], q: f64, tol: f64) -> Result<CheckReport> {
    if zeros.len() < 3 {
        return Err(Error::InsufficientData(format!("ratio check needs 3 zeros, got {}", zeros.len())));
    }
    check_increasing(zeros)?;
    let x = to_f64s(zeros);
    let ratios: Vec<f64> = x.windows(2).map(|w| w[1].1 / w[0].1).collect();
    let devs: Vec<f64> = ratios.iter().map(|r| (r / q - 1.0).abs()).collect();
    let (first, last) = (devs[0], *devs.last().unwrap());
    let tau = kendall_tau(&devs);
    let pass = last <= tol && (last < first || last == 0.0);
    Ok(CheckReport::new("ratio_check", pass)
        .stat("q", q)
        .stat("tolerance", tol)
        .stat("first_deviation", first)
        .stat("last_deviation", last)
        .stat("max_abs_ratio_minus_q_tail", ratios.iter().rev().take(5).map(|r| (r - q).abs()).fold(0.0, f64::max))
        .stat("kendall_tau", tau)
        .with_data(json!({ "n": x.iter().take(ratios.len()).map(|v| v.0).collect::<Vec<_>>(), "ratio": ratios, "deviation": devs })))
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaFit {
    pub gamma: f64,
    /// Coefficient of `log m / m`.
    pub c: f64,
    /// Index shift `k0`: zero `n` is matched with `m = n + 1 - k0`.
    pub offset: usize,
    /// Residuals of the corrected fit, one per fitted zero.
    pub residuals: Vec<f64>,
    pub residual_norm: f64,
    /// Constant-only fit over the same zeros.
    pub plain_gamma: f64,
    pub plain_residual_norm: f64,
    /// Mean ratio over the last five fitted zeros.
    pub tail_mean: f64,
    pub fitted_indices: Vec<usize>,
}

/// Smallest `m` used in the fits: the first zeros sit outside the asymptotic regime.
pub const GAMMA_FIT_MIN_M: usize = 3;

fn normalised(n: usize, x: f64, k0: usize, q: f64) -> Option<(f64, f64)> {
    let m = (n + 1).checked_sub(k0)?;
    if m < GAMMA_FIT_MIN_M {
        return None;
    }
    let m = m as f64;
    Some((m, x / (m * q.powf(m - 1.0))))
}

/// Fit `x_n / (m q^(m-1)) = gamma + c log(m)/m`, `m = n + 1 - k0`, for every
/// `k0` in the window; keeps the offset with the smallest scale-free residual.
pub fn gamma_fit(zeros: &[ZeroRecord], q: f64, _ctx: &PrecCtx) -> Result<GammaFit> {
    if zeros.len() < 6 {
        return Err(Error::InsufficientData(format!("gamma fit needs 6 zeros, got {}", zeros.len())));
    }
    check_increasing(zeros)?;
    let x = to_f64s(zeros);
    let mut best: Option<(f64, GammaFit)> = None;
    for k0 in OFFSET_WINDOW {
        let pts: Vec<(usize, f64, f64)> = x
            .iter()
            .filter_map(|&(n, xv)| normalised(n, xv, k0, q).map(|(m, r)| (n, m, r)))
            .collect();
        if pts.len() < 6 {
            continue;
        }
        let rows: Vec<Vec<f64>> = pts.iter().map(|p| vec![1.0, p.1.ln() / p.1]).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.2).collect();
        let Some((coef, res)) = lstsq(&rows, &y) else { continue };
        if !(coef[0] > 0.0) {
            continue;
        }
        let plain = y.iter().sum::<f64>() / y.len() as f64;
        let plain_res: Vec<f64> = y.iter().map(|v| v - plain).collect();
        let tail: Vec<f64> = y.iter().rev().take(5).copied().collect();
        let score = norm(&res) / coef[0];
        let fit = GammaFit {
            gamma: coef[0],
            c: coef[1],
            offset: k0,
            residual_norm: norm(&res),
            residuals: res,
            plain_gamma: plain,
            plain_residual_norm: norm(&plain_res),
            tail_mean: tail.iter().sum::<f64>() / tail.len() as f64,
            fitted_indices: pts.iter().map(|p| p.0).collect(),
        };
        if best.as_ref().map_or(true, |(s, _)| score < *s * (1.0 - 1e-9)) {
            best = Some((score, fit));
        }
    }
    best.map(|b| b.1)
        .ok_or_else(|| Error::DegenerateFit("no offset in [0, 8] gives a positive gamma from 6 or more zeros".into()))
}

/// Deviations `|t_{k0+k} / ((k+1) q^k) - 1|` at the offset chosen by [`gamma_fit`].
pub fn robinson_check(zeros: &[ZeroRecord], q: f64) -> Result<CheckReport> {
    robinson_check_with(zeros, q, 0.05)
}

pub fn robinson_check_with(zeros: &[ZeroRecord], q: f64, tol: f64) -> Result<CheckReport> {
    let ctx = PrecCtx::default();
    let fit = gamma_fit(zeros, q, &ctx)?;
    let k0 = fit.offset;
    let pts: Vec<(usize, f64)> = to_f64s(zeros)
        .into_iter()
        .filter(|p| p.0 >= k0)
        .map(|(n, x)| {
            let k = (n - k0) as f64;
            (n, (x / ((k + 1.0) * q.powf(k)) - 1.0).abs())
        })
        .collect();
    if pts.len() < 5 {
        return Err(Error::InsufficientData("robinson check needs 5 zeros past the offset".into()));
    }
    let devs: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let last5 = devs.iter().rev().take(5).fold(0f64, |a, &b| a.max(b));
    let tau = kendall_tau(&devs);
    let trend_ok = tau <= 0.0 && (*devs.last().unwrap() < devs[0] || last5 == 0.0);
    Ok(CheckReport::new("robinson_check", last5 <= tol && trend_ok)
        .stat("k0", k0)
        .stat("tolerance", tol)
        .stat("max_deviation_last5", last5)
        .stat("kendall_tau", tau)
        .with_data(json!({ "n": pts.iter().map(|p| p.0).collect::<Vec<_>>(), "deviation": devs })))
}

/// `s_n = (t_n / (m q^(m-1)) - 1) m^2` against `psi(q) = sum sigma(k) q^-k`.
/// Diagnostic: the argument convention of `psi` is not settled.
pub fn zhang_check(zeros: &[ZeroRecord], q: f64, ctx: &PrecCtx) -> Result<CheckReport> {
    let psi = divisor_gf(&Float::with_val(ctx.bits(), q), ctx)?.value.to_f64();
    if zeros.len() < 10 {
        return Err(Error::InsufficientData(format!("zhang check needs 10 zeros, got {}", zeros.len())));
    }
    let k0 = gamma_fit(zeros, q, ctx).map(|f| f.offset).unwrap_or(0);
    zhang_with_offset(zeros, q, k0, psi)
}

fn zhang_with_offset(zeros: &[ZeroRecord], q: f64, k0: usize, psi: f64) -> Result<CheckReport> {
    let pts: Vec<(usize, f64)> = to_f64s(zeros)
        .into_iter()
        .filter_map(|(n, x)| {
            let m = (n + 1).checked_sub(k0).filter(|&m| m >= 1)? as f64;
            Some((n, (x / (m * q.powf(m - 1.0)) - 1.0) * m * m))
        })
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData("zhang check needs 3 zeros past the offset".into()));
    }
    let tail: Vec<f64> = pts.iter().rev().take(3).map(|p| p.1).collect();
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let ratio = tail_mean / psi;
    Ok(CheckReport::new("zhang_check", (ratio - 1.0).abs() <= 0.25)
        .stat("diagnostic", true)
        .stat("k0", k0)
        .stat("psi", psi)
        .stat("s_tail_mean", tail_mean)
        .stat("agreement_ratio", ratio)
        .with_data(json!({ "n": pts.iter().map(|p| p.0).collect::<Vec<_>>(), "s": pts.iter().map(|p| p.1).collect::<Vec<_>>() })))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::zeros::enumerate::ZeroSource;

    pub(crate) fn records(xs: &[(usize, f64)]) -> Vec<ZeroRecord> {
        xs.iter()
            .map(|&(n, x)| ZeroRecord {
                n,
                x: Float::with_val(256, x),
                enclosure: Float::new(256),
                source: ZeroSource::Series,
            })
            .collect()
    }

    #[test]
    fn geometric_ratio_and_constant_input() {
        let z = records(&(0..10).map(|n| (n, 2f64.powi(n as i32))).collect::<Vec<_>>());
        let r = ratio_check(&z, 2.0).unwrap();
        assert_eq!(r.statistics["last_deviation"], 0.0);
        let flat = records(&[(0, 1.0), (1, 1.0), (2, 1.0)]);
        assert!(ratio_check(&flat, 2.0).is_err());
        assert!(matches!(ratio_check(&flat[..2], 2.0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn synthetic_gamma() {
        let c = PrecCtx::default();
        let q = 2f64;
        let z = records(&(0..30).map(|n| (n, (n as f64 + 1.0) * q.powi(n as i32) * 3.0)).collect::<Vec<_>>());
        let f = gamma_fit(&z, q, &c).unwrap();
        assert_eq!(f.offset, 0);
        assert!((f.gamma - 3.0).abs() < 1e-10 && f.c.abs() < 1e-8);

        let z = records(
            &(0..30)
                .map(|n| {
                    let m = n as f64 + 1.0;
                    (n, m * q.powf(m - 1.0) * (3.0 + m.ln() / m))
                })
                .collect::<Vec<_>>(),
        );
        let f = gamma_fit(&z, q, &c).unwrap();
        assert_eq!(f.offset, 0);
        assert!((f.gamma - 3.0).abs() < 1e-6, "{}", f.gamma);
        assert!(f.residual_norm < f.plain_residual_norm);
    }

    #[test]
    fn robinson_synthetic_and_shift() {
        let q = 2f64;
        let z = records(&(0..12).map(|n| (n, (n as f64 + 1.0) * q.powi(n as i32))).collect::<Vec<_>>());
        let r = robinson_check(&z, q).unwrap();
        assert_eq!(r.statistics["k0"], 0);
        assert_eq!(r.statistics["max_deviation_last5"], 0.0);
        let shifted = records(&(3..16).map(|n| (n, (n as f64 - 2.0) * q.powi(n as i32 - 3))).collect::<Vec<_>>());
        let r = robinson_check(&shifted, q).unwrap();
        assert_eq!(r.statistics["k0"], 3);
        assert!(r.pass);
    }

    #[test]
    fn zhang_construction() {
        let c = PrecCtx::default();
        let q = 2f64;
        let psi = divisor_gf(&c.real(2), &c).unwrap().value.to_f64();
        let z = records(
            &(0..20)
                .map(|n| {
                    let m = n as f64 + 1.0;
                    (n, m * q.powf(m - 1.0) * (1.0 + psi / (m * m)))
                })
                .collect::<Vec<_>>(),
        );
        let r = zhang_with_offset(&z, q, 0, psi).unwrap();
        assert!((r.statistics["agreement_ratio"].as_f64().unwrap() - 1.0).abs() < 1e-9);
        assert!(matches!(zhang_check(&z, 1.0, &c), Err(Error::Divergent(_))));
    }
}
