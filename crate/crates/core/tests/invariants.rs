//! Property suites: recurrences, functional equations, dual representations,
//! FDE residuals and scale invariances.

mod support;

use pantolab::growth::polynomial_solution_condition;
use pantolab::numerics::digamma;
use pantolab::series::{pantograph_coeff, pantograph_eval_direct, pantograph_eval_truncated, PantographParams, TruncOptions};
use pantolab::solver::{continue_solution, HighOrderFDE, InitialFunction, Interp};
use pantolab::zeros::{enumerate_zeros, gamma_fit};
use pantolab::{Complex, Float, PrecCtx};
use proptest::prelude::*;
use rug::Rational;
use support::{abs, coeff, disk_point, dist, sector_point};

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn gamma_recurrences(z in sector_point(0.1, 50.0)) {
        support::gamma_recurrences(z)?;
    }

    #[test]
    fn dual_representations(y in -3.0..3.0f64, lambda in 0.1..0.9f64) {
        support::dual_representations(y, lambda)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn fde_residual(lambda in 0.1..0.9f64, a in coeff(), b in coeff(), z in disk_point(20.0)) {
        support::fde_residual(lambda, a, b, z)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn q_functional_equation(alpha in disk_point(3.0), lambda in 0.05..0.95f64) {
        support::q_functional_equation(alpha, lambda)?;
    }

    // doubling the precision changes nothing above the last few bits
    #[test]
    fn digamma_precision_ladder((re, im) in sector_point(0.5, 50.0)) {
        let c = PrecCtx::default();
        let d = c.doubled();
        let lo = digamma(&c.complex((re, im)), &c).unwrap();
        let hi = digamma(&d.complex((re, im)), &d).unwrap();
        let hi = Complex::with_val(c.bits(), &hi);
        prop_assert!(dist(&lo, &hi) <= abs(&hi).max(1.0) * 2f64.powi(8 - c.bits() as i32));
    }

    #[test]
    fn detector_is_scale_invariant(s in prop_oneof![-50.0..-0.01f64, 0.01..50.0f64]) {
        let c = PrecCtx::default();
        let term = |a: f64, alpha: f64| (0, 0, c.complex((a * s, 0)), c.real(alpha));
        let fde = HighOrderFDE::compressed(1, &[term(1.0, 0.5), term(-2.0, 0.25)]).unwrap();
        prop_assert_eq!(polynomial_solution_condition(&fde, 20, &c), vec![1]);
    }
}

const TRIPLES: [(f64, f64, f64); 5] = [(0.6, 1.0, 1.0), (0.6, 3.0, -2.0), (0.4, -1.0, 2.0), (0.3, 5.0, 0.5), (0.8, -0.7, -1.5)];

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn truncated_matches_direct(k in 0..TRIPLES.len(), z in disk_point(5.0)) {
        let c = PrecCtx::default();
        let (l, a, b) = TRIPLES[k];
        let params = PantographParams::real(l, a, b, &c).unwrap();
        let z = c.complex(z);
        let d = pantograph_eval_direct(&params, &z, &c).unwrap().value;
        let t = pantograph_eval_truncated(&params, &z, TruncOptions::default(), &c).unwrap().value.value;
        prop_assert!(dist(&t, &d) <= 10.0 * c.target() * abs(&d).max(1.0), "{:e}", dist(&t, &d));
    }
}

fn random_table(seed: u64, c: &PrecCtx) -> (Vec<Float>, Vec<f64>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut xs: Vec<f64> = (0..5).map(|_| rng.random_range(0.55..0.95)).collect();
    xs.sort_by(f64::total_cmp);
    xs.insert(0, 0.5);
    xs.push(1.0);
    let ys = xs.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
    (xs.into_iter().map(|x| c.real(x)).collect(), ys)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn solver_residual(seed in any::<u64>(), a in -2.0..2.0f64, b in -1.0..1.0f64) {
        let c = PrecCtx::default();
        let params = PantographParams::real(0.5, a, b, &c).unwrap();
        let (xs, ys) = random_table(seed, &c);
        let ys = ys.into_iter().map(|y| c.real(y)).collect();
        let phi = InitialFunction::table(&c.real(0.5), &c.real(1), xs, ys, Interp::Linear, &c).unwrap();
        let sol = continue_solution(&params, &phi, &c.real(40), &c).unwrap();
        let r = sol.residual_check(30).unwrap();
        let bound = (10.0 * sol.global_err().to_f64()).max(10.0 * c.target());
        prop_assert!(r.max_rel <= bound, "residual {:e} at {} vs {:e}", r.max_rel, r.worst_x, bound);
    }

    // zeros and gamma do not see a constant factor on the solution
    #[test]
    fn zeros_are_scale_invariant(seed in any::<u64>(), s in prop_oneof![-20.0..-0.05f64, 0.05..20.0f64]) {
        let c = PrecCtx::default();
        let params = PantographParams::real(0.5, -1.0, 0.0, &c).unwrap();
        let (xs, ys) = random_table(seed, &c);
        let (x0, hi) = (c.real(1), c.real(1e5));
        let run = |k: f64| {
            // scale at working precision: an f64 product would perturb phi itself
            let ys = ys.iter().map(|y| c.real(*y) * c.real(k)).collect();
            let phi = InitialFunction::table(&c.real(0.5), &x0, xs.clone(), ys, Interp::Linear, &c).unwrap();
            let sol = continue_solution(&params, &phi, &hi, &c).unwrap();
            enumerate_zeros(&sol, &x0, &hi, usize::MAX, &c).unwrap()
        };
        let (z1, z2) = (run(1.0), run(s));
        prop_assert_eq!(z1.len(), z2.len());
        for (u, v) in z1.iter().zip(&z2) {
            prop_assert!(Float::with_val(c.bits(), &u.x - &v.x).abs().to_f64() <= 1e-20 * u.x.to_f64());
        }
        if z1.len() >= 6 {
            let (g1, g2) = (gamma_fit(&z1, 2.0, &c).unwrap(), gamma_fit(&z2, 2.0, &c).unwrap());
            prop_assert_eq!(g1.offset, g2.offset);
            prop_assert!((g1.gamma - g2.gamma).abs() <= 1e-12 * g1.gamma);
        }
    }
}

/// `(n+1) f_{n+1} = (a lambda^n + b) f_n` in exact rationals.
#[test]
fn coefficient_recurrence_exact() {
    let c = PrecCtx::with_bits(512).unwrap();
    let (lam, a, b) = (Rational::from((3, 5)), Rational::from(2), Rational::from((-1, 3)));
    let params = PantographParams::new(
        &Float::with_val(512, &lam),
        &Complex::with_val(512, (Float::with_val(512, &a), 0)),
        &Complex::with_val(512, (Float::with_val(512, &b), 0)),
        &c,
    )
    .unwrap();
    let mut f = Rational::from(1);
    let mut pw = Rational::from(1);
    for n in 0..40u32 {
        let got = pantograph_coeff(&params, n, &c).unwrap();
        let want = Float::with_val(512, &f);
        let err = Float::with_val(512, got.real() - &want).abs();
        assert!(err <= Float::with_val(512, want.abs_ref()) * 1e-140, "n = {n}");
        assert!(got.imag().is_zero());
        f = f * (Rational::from(&a * &pw) + &b) / (n + 1);
        pw *= &lam;
    }
}
