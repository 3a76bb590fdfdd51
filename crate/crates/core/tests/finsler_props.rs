mod common;

use common::c;
use finslerlab::catalog::{self, MetricSpec};
use finslerlab::finsler;
use finslerlab::linalg;
use finslerlab::rng;
use finslerlab::FinslerError;
use proptest::prelude::*;

fn whole_space_pairs() -> Vec<MetricSpec> {
    vec![
        catalog::euclidean(2),
        catalog::fs_product(2),
        catalog::fubini_study(2),
        catalog::minkowski_p(2, 2.0).unwrap(),
        catalog::minkowski_p(2, 3.0).unwrap(),
        catalog::conformal(&catalog::euclidean(2), catalog::ScalarField::abs2()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn curvature_is_projectively_invariant(metric in 0usize..15, seed in 0u64..10_000, lr in -2.0f64..2.0, li in -2.0f64..2.0) {
        prop_assume!(lr * lr + li * li > 1e-2);
        let m = &common::catalog()[metric];
        let (z, v) = rng::sample_point(m, seed, 0);
        let lv: Vec<_> = v.iter().map(|x| x * c(lr, li)).collect();
        let k1 = finsler::hsc(m, &z, &v).unwrap();
        let k2 = finsler::hsc(m, &z, &lv).unwrap();
        prop_assert!((k1 - k2).abs() <= 1e-9 * (1.0 + k1.abs()), "{}: {k1} vs {k2}", m.name);
    }

    #[test]
    fn curvature_within_known_range(metric in 0usize..15, seed in 0u64..10_000) {
        let m = &common::catalog()[metric];
        let (z, v) = rng::sample_point(m, seed, 0);
        let k = finsler::hsc(m, &z, &v).unwrap();
        if let Some((lo, hi)) = m.hsc_range {
            prop_assert!(k >= lo - 1e-9 && k <= hi + 1e-9, "{}: {k} outside [{lo}, {hi}]", m.name);
        }
    }

    #[test]
    fn hermitian_metrics_collapse(seed in 0u64..10_000) {
        for m in common::catalog().iter().filter(|m| m.flags.is_hermitian) {
            let (z, v) = rng::sample_point(m, seed, 0);
            prop_assert!(linalg::max_abs(&finsler::ghat(m, &z, &v).unwrap()) <= 1e-12);
            prop_assert!(linalg::max_abs(&finsler::condition12_residual(m, &z, &v).unwrap()) <= 1e-12);
        }
    }

    #[test]
    fn decomposition_holds(metric in 0usize..15, seed in 0u64..10_000) {
        let m = &common::catalog()[metric];
        let (z, v) = rng::sample_point(m, seed, 0);
        prop_assert!(finsler::decomposition_residual(m, &z, &v).unwrap() <= 1e-8, "{}", m.name);
    }

    #[test]
    fn horizontal_laplacian_bounds_curvature_difference(a in 0usize..6, b in 0usize..6, seed in 0u64..10_000) {
        let ms = whole_space_pairs();
        let (z, v) = rng::sample_point(&ms[a], seed, 0);
        let sides = finsler::laplacian_bound_sides(&ms[a], &ms[b], &z, &v);
        // minkowski Levi forms degenerate near the coordinate axes
        prop_assume!(!matches!(sides, Err(FinslerError::Degenerate { .. })));
        let (lhs, rhs) = sides.unwrap();
        prop_assert!(lhs >= rhs - 1e-9 * (1.0 + rhs.abs()), "{} / {}: {lhs} < {rhs}", ms[a].name, ms[b].name);
    }
}

#[test]
fn both_vertical_derivative_forms_agree() {
    for m in common::catalog() {
        for p in 0..5 {
            let (z, v) = rng::sample_point(&m, 21, p);
            let cd = finsler::curvature(&m, &z, &v).unwrap();
            let d = linalg::max_abs(&(&cd.cond12 - &cd.cond12_expanded));
            assert!(d <= 1e-10 * (1.0 + linalg::max_abs(&cd.cond12)), "{}: {d}", m.name);
        }
    }
}

#[test]
fn same_metric_laplacian_is_zero_bound() {
    let m = catalog::fs_product(2);
    let (z, v) = rng::sample_point(&m, 3, 0);
    let (lhs, rhs) = finsler::laplacian_bound_sides(&m, &m, &z, &v).unwrap();
    assert!(lhs.abs() < 1e-12 && rhs.abs() < 1e-12);
}
