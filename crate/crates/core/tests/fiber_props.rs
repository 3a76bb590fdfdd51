mod common;

use common::{c, norm};
use finslerlab::catalog::{self, HermitianField};
use finslerlab::fiber::{self, FiberQuadrature};
use finslerlab::linalg;
use finslerlab::rng;
use finslerlab::FinslerError;
use proptest::prelude::*;

fn usable_charts(v: &[num_complex::Complex64]) -> Vec<usize> {
    let r = norm(v);
    (0..v.len()).filter(|&k| v[k].norm() > 0.1 * r).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn chart_determinant_identity(metric in 0usize..15, seed in 0u64..10_000) {
        let m = &common::catalog()[metric];
        prop_assume!(m.dim >= 2);
        let (z, v) = rng::sample_point(m, seed, 0);
        for k in usable_charts(&v) {
            match fiber::lemma9_residual(m, &z, &v, k) {
                Err(FinslerError::Degenerate { .. }) => {}
                r => prop_assert!(r.unwrap() <= 1e-8, "{} chart {k}", m.name),
            }
        }
    }

    #[test]
    fn chart_hessian_scales_with_the_chart(metric in 0usize..15, seed in 0u64..10_000) {
        let m = &common::catalog()[metric];
        prop_assume!(m.dim >= 2);
        let (z, v) = rng::sample_point(m, seed, 1);
        let n = m.dim as i32;
        let reduced: Vec<f64> = usable_charts(&v)
            .into_iter()
            .map(|k| fiber::chart_hessian_det(m, &z, &v, k).unwrap() / v[k].norm_sqr().powi(n))
            .collect();
        for r in &reduced[1..] {
            prop_assert!((r - reduced[0]).abs() <= 1e-8 * reduced[0].abs(), "{}: {reduced:?}", m.name);
        }
    }

    #[test]
    fn line_bundle_weight_two_ways(seed in 0u64..10_000, p in 2u32..4) {
        let m = catalog::minkowski_p(3, p as f64).unwrap();
        let g = HermitianField::fubini_study(3);
        let (z, v) = rng::sample_point(&m, seed, 2);
        for k in usable_charts(&v) {
            let w = fiber::phi_weight(&m, &g, &z, &v, k).unwrap();
            prop_assert!(w.residual() <= 1e-8);
        }
    }

    #[test]
    fn kahler_fields_have_equal_scalars(x in -2.0f64..2.0, y in -2.0f64..2.0, u in -2.0f64..2.0, w in -2.0f64..2.0) {
        let h = HermitianField::fubini_study(2);
        let (s, s_hat) = fiber::scalar_curvatures(&h, &[c(x, y), c(u, w)]).unwrap();
        let (s0, _) = fiber::scalar_curvatures(&h, &[c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        prop_assert!((s - s_hat).abs() <= 1e-10 * (1.0 + s.abs()));
        prop_assert!((s - s0).abs() <= 1e-10 * (1.0 + s0.abs()));
    }
}

#[test]
fn finite_difference_scalars_match_exact() {
    let h = HermitianField::fubini_study(2);
    let z = [c(0.3, -0.1), c(0.2, 0.5)];
    let (s, s_hat) = fiber::scalar_curvatures(&h, &z).unwrap();
    let at = |x: &[num_complex::Complex64]| Ok(h.at(x));
    let (sf, sf_hat) = fiber::scalar_curvatures_fd(&at, &z, fiber::FD_STEP).unwrap();
    assert!((s - sf).abs() < 1e-8 && (s_hat - sf_hat).abs() < 1e-8, "{s} {sf} {s_hat} {sf_hat}");
}

#[test]
fn induced_metric_of_a_non_hermitian_metric() {
    let m = catalog::minkowski_p(2, 2.0).unwrap();
    let g = HermitianField::identity(2);
    let z = [c(0.1, 0.2), c(-0.3, 0.1)];
    let mc = fiber::induced_metric(&m, &g, &z, &FiberQuadrature::monte_carlo(40_000, 3)).unwrap();
    assert!(linalg::max_abs(&(&mc.h_dual - mc.h_dual.adjoint())) < 1e-14);
    let eig = mc.h_dual.clone().symmetric_eigenvalues();
    assert!(eig.iter().all(|&x| x > 0.0), "{eig}");
    assert!(mc.rejected == 0);

    let grid = fiber::induced_metric(&m, &g, &z, &FiberQuadrature::chart_grid(64, 0)).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let d = (mc.h_dual[(i, j)] - grid.h_dual[(i, j)]).norm();
            assert!(d < 4.0 * mc.stderr[(i, j)] + grid.stderr[(i, j)] + 1e-10, "({i},{j}) {d}");
        }
    }
}

#[test]
fn induced_metric_scales_with_det_g() {
    let m = catalog::minkowski_p(2, 3.0).unwrap();
    let z = [c(0.4, 0.0), c(0.1, -0.7)];
    let quad = FiberQuadrature::monte_carlo(5_000, 11);
    let id = HermitianField::identity(2);
    let fs = HermitianField::fubini_study(2);
    let a = fiber::induced_metric(&m, &id, &z, &quad).unwrap();
    let b = fiber::induced_metric(&m, &fs, &z, &quad).unwrap();
    let r = a.reinduce(&id.at(&z), &fs.at(&z)).unwrap();
    assert!(linalg::max_abs(&(&r.h_dual - &b.h_dual)) < 1e-12 * linalg::max_abs(&b.h_dual));
    assert!((r.det_h - b.det_h).abs() < 1e-10 * b.det_h);
}

#[test]
fn rescaling_is_idempotent() {
    let m = catalog::fs_product(2);
    let z = [c(0.2, 0.1), c(-0.1, 0.3)];
    let quad = FiberQuadrature::monte_carlo(4_000, 5);
    let g0 = HermitianField::identity(2).at(&z);
    let h0 = fiber::induced_metric(&m, &HermitianField::identity(2), &z, &quad).unwrap();
    let g1 = fiber::rescale_g(&g0, &h0).unwrap();
    let h1 = h0.reinduce(&g0, &g1).unwrap();
    assert!((fiber::rescale_factor(&g1, &h1).unwrap() - 1.0).abs() < 1e-12);
    let g2 = fiber::rescale_g(&g1, &h1).unwrap();
    assert!(linalg::max_abs(&(&g2 - &g1)) < 1e-12);
}

#[test]
fn skewed_chart_on_minkowski() {
    let m = catalog::minkowski_p(2, 3.0).unwrap();
    let z = [c(0.0, 0.0), c(0.0, 0.0)];
    for s in [0.1, 0.03, 0.01] {
        let v = [c(s, -0.5 * s), c(0.8, 0.6)];
        assert!(fiber::lemma9_residual(&m, &z, &v, 0).unwrap() <= 1e-8, "{s}");
    }
}
