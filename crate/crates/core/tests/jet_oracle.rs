mod common;

use finslerlab::jet::{default_step, evaluate_jet, fd_oracle, WirtingerIndex};
use finslerlab::rng;
use proptest::prelude::*;
use rand::seq::IndexedRandom;

#[test]
fn jets_match_finite_differences_across_catalog() {
    for m in common::catalog() {
        let n = m.dim;
        let max_order = if n == 1 { 4 } else { 3 };
        let indices: Vec<WirtingerIndex> = WirtingerIndex::all(n, max_order).into_iter().filter(|i| i.order() > 0).collect();
        for p in 0..4u64 {
            let (z, v) = rng::sample_point(&m, 11, p);
            let pj = evaluate_jet(&m, &z, &v, max_order).unwrap();
            let mut r = rng::stream(12, p);
            for idx in indices.choose_multiple(&mut r, 12) {
                let ad = pj.wirtinger(idx).unwrap();
                let fd = fd_oracle(&m, &z, &v, idx, default_step(idx.order())).unwrap();
                assert!(
                    (ad - fd).norm() <= 1e-4 * (1.0 + ad.norm()),
                    "{} {idx} at z={z:?} v={v:?}: jet {ad} fd {fd}",
                    m.name
                );
            }
        }
    }
}

#[test]
fn closed_forms_match_jets() {
    for m in common::catalog() {
        for p in 0..10u64 {
            let (z, v) = rng::sample_point(&m, 5, p);
            let order = m.overrides.iter().map(|cf| cf.index.order()).max().unwrap_or(0);
            let pj = evaluate_jet(&m, &z, &v, order).unwrap();
            for cf in &m.overrides {
                let ad = pj.wirtinger(&cf.index).unwrap();
                let exact = (cf.eval)(&z, &v);
                assert!((ad - exact).norm() <= 1e-10 * (1.0 + exact.norm()), "{} {}", m.name, cf.label);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conjugate_index_gives_conjugate_derivative(metric in 0usize..15, seed in 0u64..1000, pick in 0usize..1000) {
        let m = &common::catalog()[metric];
        let (z, v) = rng::sample_point(m, seed, 0);
        let pj = evaluate_jet(m, &z, &v, 3).unwrap();
        let all = WirtingerIndex::all(m.dim, 3);
        let idx = &all[pick % all.len()];
        let a = pj.wirtinger(idx).unwrap();
        let b = pj.wirtinger(&idx.conj()).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn value_matches_plain_evaluation(metric in 0usize..15, seed in 0u64..1000) {
        let m = &common::catalog()[metric];
        let (z, v) = rng::sample_point(m, seed, 1);
        let pj = evaluate_jet(m, &z, &v, 2).unwrap();
        let g = m.value(&z, &v);
        prop_assert!((pj.value() - g).abs() <= 1e-14 * g.abs());
    }
}
