mod common;

use common::c;
use finslerlab::catalog::{self, Domain};
use finslerlab::finsler;
use finslerlab::rng;
use finslerlab::schwarz::{self, DiscMap, Families, KobayashiOptions};
use finslerlab::Execution;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pullback_curvature_never_exceeds_hsc(metric in 0usize..15, seed in 0u64..10_000, ar in -3.0f64..3.0, ai in -3.0f64..3.0) {
        let m = &common::catalog()[metric];
        let (z, v) = rng::sample_point(m, seed, 0);
        let mut r = rng::stream(seed, 1);
        let dir = rng::complex_gaussian(&mut r, m.dim);
        let coeffs = (0..m.dim).map(|i| vec![z[i], v[i], dir[i] * c(ar, ai)]).collect();
        let f = DiscMap::polynomial(1e-3, coeffs);
        let k = schwarz::pullback_gauss_curvature(&f, m, c(0.0, 0.0)).unwrap();
        let h = finsler::hsc(m, &z, &v).unwrap();
        prop_assert!(k <= h + 1e-6 * (1.0 + h.abs()), "{}: disc {k} > hsc {h}", m.name);
    }

    #[test]
    fn kobayashi_bounds_are_ordered(seed in 0u64..10_000, which in 0usize..3) {
        let (m, k2) = match which {
            0 => (catalog::poincare_disc(1.0), -4.0),
            1 => (catalog::poincare_polydisc(2, 1.0), -2.0),
            _ => (catalog::ball_hyperbolic(2), -4.0),
        };
        let (z, v) = rng::sample_point(&m, seed, 0);
        let opts = KobayashiOptions { budget: 60, certify_samples: 16, ..KobayashiOptions::default() };
        let e = schwarz::kobayashi_estimate(m.domain, &z, &v, &m, Some(k2), opts).unwrap();
        let lower = e.lower.unwrap();
        prop_assert!(lower <= e.upper * (1.0 + 1e-6), "{lower} > {}", e.upper);
    }

    #[test]
    fn larger_families_never_raise_the_upper_bound(seed in 0u64..10_000, ball in any::<bool>()) {
        let m = if ball { catalog::ball_hyperbolic(2) } else { catalog::poincare_polydisc(2, 1.0) };
        let (z, v) = rng::sample_point(&m, seed, 0);
        let small = KobayashiOptions {
            families: Families { affine: true, automorphism: false, polynomial: false },
            budget: 40,
            ..KobayashiOptions::default()
        };
        let mid = KobayashiOptions { families: Families { polynomial: true, ..small.families }, ..small };
        let all = KobayashiOptions { families: Families::ALL, ..small };
        let a = schwarz::kobayashi_estimate(m.domain, &z, &v, &m, None, small).unwrap();
        let b = schwarz::kobayashi_estimate(m.domain, &z, &v, &m, None, mid).unwrap();
        let d = schwarz::kobayashi_estimate(m.domain, &z, &v, &m, None, all).unwrap();
        prop_assert!(b.upper <= a.upper * (1.0 + 1e-12));
        prop_assert!(d.upper <= b.upper * (1.0 + 1e-12));
        prop_assert!(a.family_size <= b.family_size && b.family_size <= d.family_size);
    }
}

#[test]
fn random_self_maps_satisfy_the_schwarz_bound() {
    let p = catalog::poincare_disc(1.0);
    for i in 0..5 {
        let f = schwarz::random_self_map(99, i);
        let r = schwarz::schwarz_check(&f, &p, &p, -4.0, -4.0, Default::default(), 1e-6, Execution::Parallel).unwrap();
        assert!(r.violations.is_empty() && r.sup_ratio <= 1.0 + 1e-6, "{r:?}");
    }
}

#[test]
fn squaring_map_ratio() {
    let p = catalog::poincare_disc(1.0);
    let f = DiscMap::polynomial(1.0, vec![vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]]);
    let r = schwarz::schwarz_check(&f, &p, &p, -4.0, -4.0, Default::default(), 1e-6, Execution::Sequential).unwrap();
    assert!(r.sup_ratio <= 1.0);
    let w = c(0.5, 0.0);
    // |f'|²(1−|w|²)²/(1−|w²|²)²
    let want = 4.0 * w.norm_sqr() * (1.0 - w.norm_sqr()).powi(2) / (1.0 - w.norm_sqr().powi(2)).powi(2);
    let u = p.value(&[w * w], &[w * 2.0]) / p.value(&[w], &[c(1.0, 0.0)]);
    assert!((u - want).abs() < 1e-14);
}

#[test]
fn curvature_bounds_are_certified() {
    let p = catalog::poincare_disc(1.0);
    let f = DiscMap::identity(1.0);
    assert!(schwarz::schwarz_check(&f, &p, &p, -1.0, -4.0, Default::default(), 1e-6, Execution::Sequential).is_err());
    assert!(schwarz::certify_upper_curvature(&catalog::fs_product(2), -1.0, 8, 1).is_err());
}

#[test]
fn model_extremal_discs_realise_the_model_metric() {
    for domain in [Domain::Polydisc { radius: 1.0 }, Domain::Ball { radius: 1.0 }] {
        let m = if let Domain::Ball { .. } = domain { catalog::ball_hyperbolic(2) } else { catalog::poincare_polydisc(2, 1.0) };
        for i in 0..5 {
            let (z, v) = rng::sample_point(&m, 8, i);
            let k = schwarz::model_kobayashi(domain, &z, &v).unwrap();
            let f = schwarz::model_extremal_disc(domain, &z, &v).unwrap();
            assert!(domain.contains(&f.value(c(0.0, 0.0))));
            assert!((f.radius * k - 1.0).abs() < 1e-12);
            for (d, vi) in f.derivative(c(0.0, 0.0)).iter().zip(&v) {
                assert!((d - vi).norm() < 1e-9 * (1.0 + vi.norm()));
            }
            let near = f.value(c(0.999 * f.radius, 0.0));
            assert!(domain.contains(&near));
        }
    }
}
