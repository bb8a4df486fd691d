#![allow(dead_code)]

use std::sync::Arc;

use apdfp_core::functions::{L1Norm, LeastSquares, Logistic, ZeroProx};
use apdfp_core::linops::{DenseMatrix, Identity};
use apdfp_core::solvers::{Algorithm, Monitor, NoMonitor, Problem, RunResult, SolverConfig};
use apdfp_core::vecops::dist_inf;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    DenseMatrix::new(rows, cols, data).unwrap()
}

pub fn gaussian_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Logistic loss on `n x d` Gaussian samples with random labels.
pub fn logistic_term(n: usize, d: usize, mu1: f64, seed: u64) -> Logistic {
    let mut r = rng(seed);
    let s = gaussian_matrix(n, d, 1.0, &mut r);
    let labels = (0..n)
        .map(|_| if r.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    Logistic::new(Arc::new(s), labels, mu1).unwrap()
}

/// `min logistic(x) + mu |x|_1` with `B = I`.
pub fn logistic_identity(seed: u64) -> Problem {
    let f = logistic_term(100, 10, 1e-2, seed);
    Problem::new(
        Arc::new(f),
        Arc::new(L1Norm::new(0.05).unwrap()),
        Arc::new(Identity::new(10)),
    )
    .unwrap()
}

/// `min logistic(x) + mu |Bx|_1` with a dense random `B` (8 x 10).
pub fn logistic_dense(seed: u64) -> Problem {
    let f = logistic_term(100, 10, 1e-2, seed);
    let b = gaussian_matrix(8, 10, 0.5, &mut rng(seed + 1000));
    Problem::new(
        Arc::new(f),
        Arc::new(L1Norm::new(0.05).unwrap()),
        Arc::new(b),
    )
    .unwrap()
}

/// `1/2 |Ax - y|^2 + mu |x|_1` on `d` variables with `A` scaled so `L_f` is O(1).
pub fn lasso(d: usize, mu: f64, seed: u64) -> Problem {
    let mut r = rng(seed);
    let rows = d + 3;
    let a = gaussian_matrix(rows, d, 1.0 / (rows as f64).sqrt(), &mut r);
    let y = gaussian_vec(rows, &mut r);
    let f = LeastSquares::new(Arc::new(a), y).unwrap();
    Problem::new(
        Arc::new(f),
        Arc::new(L1Norm::new(mu).unwrap()),
        Arc::new(Identity::new(d)),
    )
    .unwrap()
}

/// First-difference matrix of a chain on `d >= 2` nodes, `(d-1) x d`.
pub fn chain_differences(d: usize) -> DenseMatrix {
    let rows: Vec<Vec<f64>> = (0..d - 1)
        .map(|i| {
            let mut row = vec![0.0; d];
            row[i] = 1.0;
            row[i + 1] = -1.0;
            row
        })
        .collect();
    DenseMatrix::from_rows(&rows).unwrap()
}

/// `1/2 |Ax - y|^2 + mu |Dx|_1` with chain differences `D`.
pub fn graph_lasso(d: usize, mu: f64, seed: u64) -> Problem {
    let mut r = rng(seed);
    let rows = d + 5;
    let a = gaussian_matrix(rows, d, 1.0 / (rows as f64).sqrt(), &mut r);
    let y = gaussian_vec(rows, &mut r);
    let f = LeastSquares::new(Arc::new(a), y).unwrap();
    Problem::new(
        Arc::new(f),
        Arc::new(L1Norm::new(mu).unwrap()),
        Arc::new(chain_differences(d)),
    )
    .unwrap()
}

/// Same smooth part with `g = 0` and `B = I`.
pub fn smooth_only(problem: &Problem) -> Problem {
    let d = problem.x_dim();
    Problem::new(
        problem.f.clone(),
        Arc::new(ZeroProx),
        Arc::new(Identity::new(d)),
    )
    .unwrap()
}

pub fn run(alg: &Algorithm, problem: &Problem, iters: usize) -> RunResult {
    run_with(alg, problem, iters, &mut NoMonitor)
}

pub fn run_with(
    alg: &Algorithm,
    problem: &Problem,
    iters: usize,
    monitor: &mut dyn Monitor,
) -> RunResult {
    let config = SolverConfig {
        max_iters: iters,
        stop_tol: None,
        record_iterates: true,
        ..SolverConfig::default()
    };
    alg.run(problem, &config, monitor).unwrap()
}

/// Largest per-iterate sup-norm distance between two recorded runs.
pub fn max_iterate_gap(a: &RunResult, b: &RunResult) -> f64 {
    let (ia, ib) = (a.trace.iterates(), b.trace.iterates());
    assert_eq!(ia.len(), ib.len());
    assert!(!ia.is_empty());
    ia.iter()
        .zip(ib)
        .map(|(u, v)| dist_inf(u, v))
        .fold(0.0, f64::max)
}
