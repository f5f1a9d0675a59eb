//! Properties shared by the invariant suites and the acceptance run.
#![allow(dead_code)]

use pantolab::asymptotics::{h_fourier, h_theta, k_fourier, k_theta};
use pantolab::numerics::{digamma, log_gamma};
use pantolab::series::{pantograph_eval_direct, pantograph_sum, q_pochhammer, PantographParams};
use pantolab::{Complex, Float, PrecCtx};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestError, TestRng, TestRunner};

pub fn abs(z: &Complex) -> f64 {
    Float::with_val(z.prec().0, z.abs_ref()).to_f64()
}

pub fn dist(a: &Complex, b: &Complex) -> f64 {
    abs(&Complex::with_val(a.prec().0, a - b))
}

/// Deterministic runner, so the acceptance line is reproducible.
pub fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

pub fn outcome<T: std::fmt::Debug>(r: Result<(), TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

/// `|z| <= r_max`, `|z| >= r_min`, `|Arg z| <= pi - 0.1`.
pub fn sector_point(r_min: f64, r_max: f64) -> impl Strategy<Value = (f64, f64)> {
    let a_max = std::f64::consts::PI - 0.1;
    (r_min..r_max, -a_max..a_max).prop_map(|(r, t)| (r * t.cos(), r * t.sin()))
}

pub fn disk_point(r_max: f64) -> impl Strategy<Value = (f64, f64)> {
    (0.0..r_max, -std::f64::consts::PI..std::f64::consts::PI).prop_map(|(r, t)| (r * t.cos(), r * t.sin()))
}

/// `psi(z+1) = psi(z) + 1/z` and `log Gamma(z+1) = log Gamma(z) + log z`.
pub fn gamma_recurrences((re, im): (f64, f64)) -> Result<(), TestCaseError> {
    let c = PrecCtx::default();
    let z = c.complex((re, im));
    let z1 = Complex::with_val(c.bits(), &z + 1u32);
    let tol = 10.0 * c.target();

    let (p0, p1) = (digamma(&z, &c).unwrap(), digamma(&z1, &c).unwrap());
    let want = Complex::with_val(c.bits(), &p0 + Complex::with_val(c.bits(), z.recip_ref()));
    let scale = abs(&p1).max(abs(&p0)).max(1.0);
    prop_assert!(dist(&p1, &want) <= tol * scale, "digamma at {re}+{im}i: {:e}", dist(&p1, &want) / scale);

    let (l0, l1) = (log_gamma(&z, &c).unwrap(), log_gamma(&z1, &c).unwrap());
    let want = Complex::with_val(c.bits(), &l0 + Complex::with_val(c.bits(), z.ln_ref()));
    let scale = abs(&l1).max(abs(&l0)).max(1.0);
    prop_assert!(dist(&l1, &want) <= tol * scale, "log_gamma at {re}+{im}i: {:e}", dist(&l1, &want) / scale);
    Ok(())
}

/// `Q(alpha) = (1 + alpha) Q(alpha lambda)`.
pub fn q_functional_equation((re, im): (f64, f64), lambda: f64) -> Result<(), TestCaseError> {
    let c = PrecCtx::default();
    let p = c.bits();
    let lam = c.real(lambda);
    let alpha = c.complex((re, im));
    let q0 = q_pochhammer(&alpha, &lam, &c).unwrap().value;
    let shifted = Complex::with_val(p, &alpha * &lam);
    let q1 = q_pochhammer(&shifted, &lam, &c).unwrap().value;
    let rhs = Complex::with_val(p, &q1 * Complex::with_val(p, &alpha + 1u32));
    let scale = abs(&q0).max(abs(&rhs));
    prop_assert!(dist(&q0, &rhs) <= 10.0 * c.target() * scale, "alpha {re}+{im}i lambda {lambda}");
    Ok(())
}

/// Theta and Fourier forms of H and K agree; K is positive on the real axis.
pub fn dual_representations(y: f64, lambda: f64) -> Result<(), TestCaseError> {
    let c = PrecCtx::default();
    let p = c.bits();
    let l = c.real(lambda).ln();
    let y = c.complex((y, 0));
    // both forms have size sqrt(2 pi / -log lambda); H has zeros, so compare on that scale
    let scale = (2.0 * std::f64::consts::PI / -l.to_f64()).sqrt();
    let tol = c.target() * scale;
    let (ht, hf) = (h_theta(&y, &l, p), h_fourier(&y, &l, p));
    prop_assert!(dist(&ht, &hf) <= tol, "H at {y} lambda {lambda}: {:e}", dist(&ht, &hf));
    let (kt, kf) = (k_theta(&y, &l, p), k_fourier(&y, &l, p));
    prop_assert!(dist(&kt, &kf) <= tol, "K at {y} lambda {lambda}: {:e}", dist(&kt, &kf));
    prop_assert!(*kf.real() > 0);
    Ok(())
}

/// `y'(z) = a y(lambda z) + b y(z)` with `y'` from the differentiated series.
pub fn fde_residual(lambda: f64, a: (f64, f64), b: (f64, f64), z: (f64, f64)) -> Result<(), TestCaseError> {
    let c = PrecCtx::default();
    let p = c.bits();
    let params = PantographParams::new(&c.real(lambda), &c.complex(a), &c.complex(b), &c).unwrap();
    let z = c.complex(z);
    let lz = Complex::with_val(p, &z * params.lambda());
    // guard bits for the cancellation at |z| = 20
    let s = pantograph_sum(&params, &z, true, p + 128).unwrap();
    let y = Complex::with_val(p, &s.value);
    let dy = Complex::with_val(p, s.deriv.as_ref().unwrap());
    let yl = pantograph_eval_direct(&params, &lz, &c).unwrap().value;
    let ay = Complex::with_val(p, params.a() * &yl);
    let by = Complex::with_val(p, params.b() * &y);
    let rhs = Complex::with_val(p, &ay + &by);
    let scale = [abs(&y), abs(&dy), abs(&ay), abs(&by)].into_iter().fold(0.0, f64::max);
    prop_assert!(
        dist(&dy, &rhs) <= 10.0 * c.target() * scale,
        "lambda {lambda} a {a:?} b {b:?} z {z}: {:e}",
        dist(&dy, &rhs) / scale
    );
    Ok(())
}

pub fn coeff() -> impl Strategy<Value = (f64, f64)> {
    (-2.0..2.0f64, -2.0..2.0f64)
}

pub fn run_gamma_suite(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&sector_point(0.1, 50.0), gamma_recurrences))
}

pub fn run_q_suite(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&(disk_point(3.0), 0.05..0.95f64), |(a, l)| q_functional_equation(a, l)))
}

pub fn run_dual_suite(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&(-3.0..3.0f64, 0.1..0.9f64), |(y, l)| dual_representations(y, l)))
}

pub fn run_fde_suite(cases: u32) -> Result<(), String> {
    outcome(
        runner(cases).run(&(0.1..0.9f64, coeff(), coeff(), disk_point(20.0)), |(l, a, b, z)| fde_residual(l, a, b, z)),
    )
}
