use std::collections::BTreeSet;

use hcurl_core::amr::{adaptive_solve, adaptive_solve_with, doerfler_mark, AdaptiveConfig};
use hcurl_core::estimators::EstimatorKind;
use hcurl_core::problems::{interface_problem, smooth_problem};
use proptest::prelude::*;

/// Exhaustive minimum cardinality of a set reaching `theta` of the total.
fn min_cardinality(values: &[f64], theta: f64) -> usize {
    let total: f64 = values.iter().sum();
    let n = values.len();
    (0..=n)
        .find(|&k| {
            (0u32..1 << n).any(|mask| {
                mask.count_ones() as usize == k
                    && (0..n).filter(|i| mask >> i & 1 == 1).map(|i| values[i]).sum::<f64>() >= theta * total
            })
        })
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]
    #[test]
    fn doerfler_set_is_minimal(values in prop::collection::vec(0.0..1.0f64, 1..10), theta in 0.05..0.95f64) {
        let marked = doerfler_mark(&values, theta).unwrap();
        let total: f64 = values.iter().sum();
        let sum: f64 = marked.iter().map(|&t| values[t]).sum();
        prop_assert!(sum >= theta * total);
        prop_assert_eq!(marked.len(), min_cardinality(&values, theta));
    }
}

#[test]
fn smooth_run_stays_quasi_uniform() {
    let p = smooth_problem(1.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    let records = adaptive_solve_with(&p, &AdaptiveConfig::new(EstimatorKind::Robust, 0.5, 3000), |step| {
        let h: Vec<f64> = (0..step.mesh.num_triangles()).map(|t| step.mesh.diameter(t)).collect();
        let (lo, hi) = h.iter().fold((f64::MAX, 0.0_f64), |(a, b), &x| (a.min(x), b.max(x)));
        worst = worst.max(hi / lo);
    })
    .unwrap();
    assert!(records.len() > 3);
    assert!(worst <= 8.0, "diameter ratio {worst}");
}

#[test]
fn estimator_decreases_and_meshes_grow() {
    for kind in [EstimatorKind::Robust, EstimatorKind::Classical] {
        let p = interface_problem(1e2, 1.0, 1.0, 0.5, 4).unwrap();
        let records = adaptive_solve(&p, &AdaptiveConfig::new(kind, 0.5, 2000)).unwrap();
        let increases = records.windows(2).filter(|w| w[1].eta > w[0].eta).count();
        assert!(increases <= 1, "{kind:?}: {records:?}");
        assert!(records.windows(2).all(|w| w[1].elements > w[0].elements));
        assert!(records.last().unwrap().eta < 0.5 * records[0].eta);
    }
}

#[test]
fn marking_concentrates_near_interface() {
    let p = interface_problem(1e4, 1.0, 1.0, 0.5, 4).unwrap();
    let (mut near, mut total, mut steps) = (0usize, 0usize, 0usize);
    adaptive_solve_with(&p, &AdaptiveConfig::new(EstimatorKind::Robust, 0.5, 3000), |step| {
        if steps < 5 {
            let touching = step.mesh.triangles_touching_interface();
            near += step.marked.iter().filter(|&&t| touching[t]).count();
            total += step.marked.len();
        }
        steps += 1;
    })
    .unwrap();
    assert!(steps >= 5);
    let fraction = near as f64 / total as f64;
    eprintln!("interface-adjacent share of marked elements: {near}/{total}");
    assert!(fraction >= 0.3, "{fraction}");
}

#[test]
fn marked_elements_are_refined() {
    let p = smooth_problem(1.0, 1.0).unwrap();
    let mut previous: Option<(usize, BTreeSet<usize>)> = None;
    adaptive_solve_with(&p, &AdaptiveConfig::new(EstimatorKind::Robust, 0.3, 400), |step| {
        if let Some((n, marked)) = &previous {
            assert!(step.mesh.num_triangles() >= n + marked.len());
        }
        previous = Some((step.mesh.num_triangles(), step.marked.clone()));
    })
    .unwrap();
}
