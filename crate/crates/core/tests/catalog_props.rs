mod common;

use common::c;
use finslerlab::catalog::{self, ScalarField};
use finslerlab::finsler;
use finslerlab::linalg;
use finslerlab::rng;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn one_one_homogeneity(metric in 0usize..15, seed in 0u64..10_000, lr in -3.0f64..3.0, li in -3.0f64..3.0) {
        prop_assume!(lr * lr + li * li > 1e-4);
        let m = &common::catalog()[metric];
        let (z, v) = rng::sample_point(m, seed, 0);
        let lambda = c(lr, li);
        let lv: Vec<_> = v.iter().map(|x| x * lambda).collect();
        let g = m.value(&z, &v);
        prop_assert!(g > 0.0);
        prop_assert!((m.value(&z, &lv) - lambda.norm_sqr() * g).abs() <= 1e-12 * lambda.norm_sqr() * g);
    }

    #[test]
    fn hermitian_levi_form_ignores_v(seed in 0u64..10_000) {
        for m in common::catalog().iter().filter(|m| m.flags.is_hermitian) {
            let mut r = rng::stream(seed, 3);
            let z = m.sample_z(&mut r);
            let v1 = rng::complex_gaussian(&mut r, m.dim);
            let v2 = rng::complex_gaussian(&mut r, m.dim);
            let a = finsler::levi_form(m, &z, &v1).unwrap();
            let b = finsler::levi_form(m, &z, &v2).unwrap();
            prop_assert!(linalg::max_abs(&(a.clone() - b)) <= 1e-12 * (1.0 + linalg::max_abs(&a)), "{}", m.name);
        }
    }

    #[test]
    fn pullback_is_contravariant(seed in 0u64..10_000) {
        let ball = catalog::ball_hyperbolic(2);
        let f = catalog::bidisc_to_ball_map();
        let m = catalog::pullback(&ball, &f).unwrap();
        let (z, v) = rng::sample_point(&m, seed, 0);
        let fz = f.value(&z);
        let j = f.jacobian_at(&z);
        let fv: Vec<_> = (0..2).map(|i| j[i][0] * v[0] + j[i][1] * v[1]).collect();
        let direct = ball.value(&fz, &fv);
        prop_assert!((m.value(&z, &v) - direct).abs() <= 1e-12 * (1.0 + direct));
    }

    #[test]
    fn conformal_factor_multiplies(seed in 0u64..10_000) {
        let base = catalog::minkowski_p(2, 2.0).unwrap();
        let phi = ScalarField::re_z1();
        let m = catalog::conformal(&base, phi);
        let (z, v) = rng::sample_point(&m, seed, 0);
        let want = z[0].re.exp() * base.value(&z, &v);
        prop_assert!((m.value(&z, &v) - want).abs() <= 1e-13 * want);
    }
}

#[test]
fn points_outside_the_domain_are_rejected() {
    let m = catalog::poincare_disc(1.0);
    assert!(m.check_point(&[c(1.2, 0.0)], &[c(1.0, 0.0)]).is_err());
    assert!(m.check_point(&[c(0.2, 0.0)], &[c(0.0, 0.0)]).is_err());
    let b = catalog::ball_hyperbolic(2);
    assert!(b.check_point(&[c(0.8, 0.0), c(0.0, 0.7)], &[c(1.0, 0.0), c(0.0, 0.0)]).is_err());
}

#[test]
fn non_integer_minkowski_exponent_is_refused() {
    assert!(catalog::minkowski_p(2, 2.5).is_err());
    assert!(catalog::minkowski_p(2, 0.0).is_err());
}
