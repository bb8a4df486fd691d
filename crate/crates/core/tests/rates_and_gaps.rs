mod common;

use std::sync::Arc;

use apdfp_core::diagnostics::{
    certificate_check, fit_rate, partial_gap, q_value, DiagnosticMonitor, GapSpec,
};
use apdfp_core::functions::{L1Norm, LeastSquares, ProxTerm, ZeroProx};
use apdfp_core::linops::{DenseMatrix, Identity, LinearMap};
use apdfp_core::problems::{make_quadratic_toy, QuadSpec, QuadraticToy};
use apdfp_core::solvers::*;
use apdfp_core::vecops::{dot, norm};
use common::*;
use rand::Rng;

fn toy() -> QuadraticToy {
    make_quadratic_toy(QuadSpec::default()).unwrap()
}

fn toy_spec(toy: &QuadraticToy, _p: &Problem) -> GapSpec {
    toy.gap_spec()
}

struct GapRun {
    series: Vec<(usize, f64)>,
    omega1: f64,
    omega2: f64,
    uncertified: usize,
}

fn gap_run(alg: &Algorithm, p: &Problem, spec: &GapSpec, iters: usize) -> GapRun {
    let mut mon = DiagnosticMonitor::new(p).with_gap(spec.clone());
    mon.observe_start(&spec.primal_center, &spec.dual_center);
    let cfg = SolverConfig {
        max_iters: iters,
        stop_tol: None,
        cadence: Cadence::LogSpaced { per_decade: 20 },
        ..SolverConfig::default()
    };
    let res = alg.run(p, &cfg, &mut mon).unwrap();
    GapRun {
        series: res
            .trace
            .records()
            .iter()
            .map(|r| (r.iter, r.gap.unwrap()))
            .collect(),
        omega1: (mon.max_primal_dist() + spec.primal_radius).powi(2),
        omega2: (mon.max_dual_dist() + spec.dual_radius).powi(2),
        uncertified: mon.uncertified(),
    }
}

#[test]
fn toy_reference_lies_inside_the_balls() {
    let t = toy();
    let p = t.problem().unwrap();
    assert!(toy_spec(&t, &p).contains(&t.x_ref, &t.y_ref));
}

#[test]
fn apdfp_gap_decays_quadratically_and_pdfp_linearly() {
    let t = toy();
    let p = t.problem().unwrap();
    let spec = toy_spec(&t, &p);
    let acc = gap_run(&Algorithm::Apdfp(ApdfpParams::default()), &p, &spec, 2000);
    let plain = gap_run(&Algorithm::Pdfp(PdfpParams::default()), &p, &spec, 2000);
    assert_eq!(acc.uncertified + plain.uncertified, 0);
    let sa = fit_rate(&acc.series, 20, 2000).unwrap().slope;
    let sp = fit_rate(&plain.series, 20, 2000).unwrap().slope;
    assert!(sa <= -1.8, "{sa}");
    assert!((-1.3..=-0.7).contains(&sp), "{sp}");
}

#[test]
fn apdfp_gap_is_monotone_after_warmup() {
    let t = toy();
    let p = t.problem().unwrap();
    let run = gap_run(
        &Algorithm::Apdfp(ApdfpParams::default()),
        &p,
        &toy_spec(&t, &p),
        2000,
    );
    for w in run.series.windows(2).filter(|w| w[0].0 >= 10) {
        assert!(w[1].1 <= w[0].1 + 1e-9, "{w:?}");
    }
}

#[test]
fn certificate_holds_for_accelerated_schedules() {
    let t = toy();
    let p = t.problem().unwrap();
    let spec = toy_spec(&t, &p);
    for c in [0.0, 0.5 * p.lipschitz()] {
        let step = StepRule::Decaying { c };
        let run = gap_run(
            &Algorithm::Apdfp(ApdfpParams {
                step,
                ..ApdfpParams::default()
            }),
            &p,
            &spec,
            2000,
        );
        let report = certificate_check(
            &p,
            &run.series,
            step,
            p.default_lambda(),
            run.omega1,
            run.omega2,
        )
        .unwrap();
        assert!(report.all_hold(), "c = {c}");
    }
}

#[test]
fn certificate_with_degenerate_balls_only_passes_at_the_saddle() {
    let t = toy();
    let p = t.problem().unwrap();
    let step = StepRule::Decaying { c: 0.0 };
    let report = certificate_check(
        &p,
        &[(5, 0.0), (6, 1e-3)],
        step,
        p.default_lambda(),
        0.0,
        0.0,
    )
    .unwrap();
    assert!(report.entries[0].holds);
    assert!(!report.entries[1].holds);
    assert!(report.entries.iter().all(|e| e.bound == 0.0));
}

#[test]
fn saddle_point_dominates_random_points() {
    let t = toy();
    let p = t.problem().unwrap();
    let mut r = rng(1);
    let mu = t.spec.mu;
    for _ in 0..100 {
        let x: Vec<f64> = gaussian_vec(p.x_dim(), &mut r)
            .iter()
            .map(|v| 3.0 * v)
            .collect();
        let y: Vec<f64> = (0..p.y_dim()).map(|_| r.random_range(-mu..=mu)).collect();
        let q = q_value(&p, &x, &y, &t.x_ref, &t.y_ref).unwrap();
        assert!(q >= -1e-10, "{q}");
    }
}

#[test]
fn partial_gap_dominates_sampled_q_values() {
    let t = toy();
    let p = t.problem().unwrap();
    let spec = toy_spec(&t, &p);
    let mut r = rng(2);
    let x_tilde: Vec<f64> = t.x_ref.iter().map(|v| v + 0.1).collect();
    let y_tilde = vec![0.0; p.y_dim()];
    let gap = partial_gap(&p, &x_tilde, &y_tilde, &spec, None).unwrap();
    assert!(gap.certified());
    let mu = t.spec.mu;
    for _ in 0..100 {
        let dir = gaussian_vec(p.x_dim(), &mut r);
        let scale = spec.primal_radius * r.random::<f64>() / norm(&dir);
        let x: Vec<f64> = dir.iter().map(|v| v * scale).collect();
        let y: Vec<f64> = (0..p.y_dim()).map(|_| r.random_range(-mu..=mu)).collect();
        let q = q_value(&p, &x_tilde, &y_tilde, &x, &y).unwrap();
        assert!(gap.value >= q - 1e-9, "{} < {q}", gap.value);
    }
}

/// `f = 1/2 |x - a|^2`, `g = mu |.|_1`, `B` 2x2, `d = 2`: both halves of the
/// gap separate, so each is a 2-D grid search.
#[test]
fn gap_matches_grid_search_in_two_dimensions() {
    let a = vec![0.3, -0.2];
    let mu = 0.5;
    let b = DenseMatrix::from_rows(&[vec![1.0, 0.5], vec![-0.3, 1.0]]).unwrap();
    let f = LeastSquares::new(Arc::new(Identity::new(2)), a.clone()).unwrap();
    let p = Problem::new(
        Arc::new(f),
        Arc::new(L1Norm::new(mu).unwrap()),
        Arc::new(b.clone()),
    )
    .unwrap();
    let spec = GapSpec {
        primal_center: vec![0.0, 0.0],
        primal_radius: 1.0,
        dual_center: vec![0.0, 0.0],
        dual_radius: 0.6,
        inner_tol: 1e-12,
        inner_max_iters: 10_000,
    };
    let x_tilde = vec![0.8, 0.4];
    let y_tilde = vec![0.2, -0.1];
    let est = partial_gap(&p, &x_tilde, &y_tilde, &spec, None).unwrap();
    assert!(est.certified());

    let h = 1e-3;
    let steps = (2.0 / h) as i64;
    let bx = b.apply(&x_tilde).unwrap();
    let bty = b.adjoint_apply(&y_tilde).unwrap();
    let fval = |x: &[f64]| 0.5 * ((x[0] - a[0]).powi(2) + (x[1] - a[1]).powi(2));
    let mut dual_best = f64::NEG_INFINITY;
    let mut primal_best = f64::INFINITY;
    for i in 0..=steps {
        for j in 0..=steps {
            let u = [-1.0 + i as f64 * h, -1.0 + j as f64 * h];
            let y = [u[0] * 0.6, u[1] * 0.6];
            if norm(&y) <= 0.6 && y.iter().all(|v| v.abs() <= mu) {
                dual_best = dual_best.max(dot(&bx, &y));
            }
            if norm(&u) <= 1.0 {
                primal_best = primal_best.min(fval(&u) + dot(&bty, &u));
            }
        }
    }
    let conj_yt = L1Norm::new(mu).unwrap().conj_value(&y_tilde);
    let grid = fval(&x_tilde) + dual_best - (primal_best - conj_yt);
    assert!((est.value - grid).abs() <= 1e-3, "{} vs {grid}", est.value);
}

fn smooth_toy() -> Problem {
    let t = make_quadratic_toy(QuadSpec {
        mu: 0.0,
        b_scale: 0.0,
        ..QuadSpec::default()
    })
    .unwrap();
    let f = LeastSquares::with_lipschitz(t.c.clone(), t.d.clone(), t.lipschitz()).unwrap();
    Problem::new(
        Arc::new(f),
        Arc::new(ZeroProx),
        Arc::new(Identity::new(t.spec.dim)),
    )
    .unwrap()
}

fn objective_slope(alg: Algorithm, k_lo: usize, k_hi: usize) -> f64 {
    let p = smooth_toy();
    let res = run(&alg, &p, k_hi);
    // The optimum is 0: d lies in the range of C.
    let series: Vec<(usize, f64)> = res
        .trace
        .iterates()
        .iter()
        .enumerate()
        .map(|(i, x)| (i + 1, p.objective(x)))
        .collect();
    fit_rate(&series, k_lo, k_hi).unwrap().slope
}

#[test]
fn fista_objective_decays_quadratically() {
    let s = objective_slope(Algorithm::Fista(FistaParams::default()), 10, 1000);
    assert!(s <= -1.8, "{s}");
}

#[test]
fn nag_objective_decays_quadratically() {
    let s = objective_slope(Algorithm::Nag(NagParams::default()), 10, 1000);
    assert!(s <= -1.8, "{s}");
}

#[test]
fn pgd_objective_decays_linearly() {
    let s = objective_slope(Algorithm::Pgd(PgdParams::default()), 10, 1000);
    assert!((-1.3..=-0.7).contains(&s), "{s}");
}
