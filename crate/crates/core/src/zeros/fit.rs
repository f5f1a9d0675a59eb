//! Small dense least-squares problems in double precision.

use nalgebra::{DMatrix, DVector};

/// Least squares `rows * coef ~ y`; returns coefficients and residual vector.
pub(crate) fn lstsq(rows: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = rows.len();
    let k = rows.first()?.len();
    if n < k {
        return None;
    }
    let a = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) || svd.singular_values.min() <= smax * 1e-13 {
        return None;
    }
    let coef = svd.solve(&b, 0.0).ok()?;
    let res = &b - &a * &coef;
    Some((coef.iter().copied().collect(), res.iter().copied().collect()))
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Kendall's tau of a sequence against its index; negative for a decreasing trend.
pub(crate) fn kendall_tau(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += match v[j].partial_cmp(&v[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    s as f64 / (n * (n - 1) / 2) as f64
}
