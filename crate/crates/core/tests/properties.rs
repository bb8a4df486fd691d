mod common;

use std::sync::Arc;

use apdfp_core::functions::{moreau_check, GroupL2, L1Norm, Logistic, ProxTerm, SmoothTerm};
use apdfp_core::linops::{
    power_method, DenseMatrix, Grad2D, GramMode, LinearMap, SparseMatrix, XRayMap,
};
use apdfp_core::problems::{build_graph_matrix, parse_libsvm_str, write_libsvm, Dataset};
use apdfp_core::vecops::{dist, dot, norm};
use proptest::prelude::*;

fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, n)
}

/// Relative inner-product discrepancy of `<Ax, y>` against `<x, A^T y>`.
fn adjoint_discrepancy(map: &dyn LinearMap, x: &[f64], y: &[f64]) -> f64 {
    let lhs = dot(&map.apply(x).unwrap(), y);
    let rhs = dot(x, &map.adjoint_apply(y).unwrap());
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn grad2d_adjoint_and_norm_bound(x in vec_strategy(64), y in vec_strategy(128)) {
        let g = Grad2D::new(8).unwrap();
        prop_assert!(adjoint_discrepancy(&g, &x, &y) <= 1e-9);
        prop_assert!(norm(&g.apply(&x).unwrap()) <= 8f64.sqrt() * norm(&x) * (1.0 + 1e-12));
    }

    #[test]
    fn xray_adjoint(x in vec_strategy(256), y in vec_strategy(10 * 16)) {
        let a = XRayMap::new(16, 10, 16).unwrap();
        prop_assert!(adjoint_discrepancy(&a, &x, &y) <= 1e-9);
    }

    #[test]
    fn dense_and_sparse_adjoints(entries in vec_strategy(12), x in vec_strategy(4), y in vec_strategy(3)) {
        let d = DenseMatrix::new(3, 4, entries.clone()).unwrap();
        prop_assert!(adjoint_discrepancy(&d, &x, &y) <= 1e-9);
        let trip: Vec<_> = entries.iter().enumerate().map(|(p, &v)| (p / 4, p % 4, v)).collect();
        let s = SparseMatrix::from_triplets(3, 4, &trip).unwrap();
        prop_assert!(adjoint_discrepancy(&s, &x, &y) <= 1e-9);
    }

    #[test]
    fn moreau_identity(v in vec_strategy(12), gi in 0usize..3) {
        let gamma = [0.1, 1.0, 10.0][gi];
        prop_assert!(moreau_check(&L1Norm::new(0.7).unwrap(), &v, gamma) <= 1e-12 * (1.0 + norm(&v)));
        prop_assert!(moreau_check(&GroupL2::new(0.7, 2).unwrap(), &v, gamma) <= 1e-12 * (1.0 + norm(&v)));
    }

    #[test]
    fn tiny_step_prox_is_near_identity(v in vec_strategy(8)) {
        let bound = 1e-6 * (1.0 + norm(&v));
        prop_assert!(dist(&L1Norm::new(1.0).unwrap().prox(&v, 1e-8), &v) <= bound);
        prop_assert!(dist(&GroupL2::new(1.0, 2).unwrap().prox(&v, 1e-8), &v) <= bound);
    }

    #[test]
    fn logistic_descent_inequality(seed in 0u64..1000, x in vec_strategy(5), y in vec_strategy(5)) {
        let f: Logistic = common::logistic_term(20, 5, 0.1, seed);
        let l = f.lipschitz();
        let gx = f.gradient(&x).unwrap();
        let diff: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let rhs = f.value(&x) + dot(&gx, &diff) + 0.5 * l * dot(&diff, &diff);
        prop_assert!(f.value(&y) <= rhs + 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn libsvm_round_trip(rows in prop::collection::vec(
        (any::<bool>(), prop::collection::btree_map(0usize..30, -100.0f64..100.0, 0..6)), 1..20)) {
        let trip: Vec<(usize, usize, f64)> = rows
            .iter()
            .enumerate()
            .flat_map(|(i, (_, m))| m.iter().filter(|(_, &v)| v != 0.0).map(move |(&j, &v)| (i, j, v)))
            .collect();
        let samples = SparseMatrix::from_triplets(rows.len(), 30, &trip).unwrap();
        let labels = rows.iter().map(|(b, _)| if *b { 1.0 } else { -1.0 }).collect();
        let ds = Dataset::new(samples, labels).unwrap();
        let mut buf = Vec::new();
        write_libsvm(&ds, &mut buf).unwrap();
        let back = parse_libsvm_str(std::str::from_utf8(&buf).unwrap(), Some(30)).unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn graph_rows_are_signed_pairs(seed in 0u64..500, threshold in 0.05f64..0.95) {
        let (ds, _) = apdfp_core::problems::synthetic_classification(40, 6, seed).unwrap();
        let g = build_graph_matrix(&ds, threshold).unwrap();
        prop_assert_eq!(g.cols(), 6);
        for r in 0..g.rows() {
            let (cols, vals) = g.row(r);
            prop_assert_eq!(cols.len(), 2);
            prop_assert!(cols[0] < cols[1]);
            prop_assert_eq!(vals, &[1.0, -1.0][..]);
        }
    }
}

#[test]
fn power_method_restarts_agree() {
    let mut r = common::rng(3);
    let b = common::gaussian_matrix(15, 9, 1.0, &mut r);
    let single = power_method(&b, GramMode::BtB, 1e-12, 100_000, 0)
        .unwrap()
        .value;
    let best = (0..3)
        .map(|s| {
            power_method(&b, GramMode::BtB, 1e-12, 100_000, s)
                .unwrap()
                .value
        })
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((best - single).abs() <= 1e-9 * best);
}

#[test]
fn logistic_lipschitz_uses_the_sample_gram() {
    let mut r = common::rng(4);
    let s = Arc::new(common::gaussian_matrix(30, 4, 1.0, &mut r));
    let rho = power_method(s.as_ref(), GramMode::BtB, 1e-12, 100_000, 0)
        .unwrap()
        .value;
    let f = Logistic::new(s, vec![1.0; 30], 0.25).unwrap();
    assert!((f.lipschitz() - (rho / 120.0 + 0.25)).abs() <= 1e-8);
}
