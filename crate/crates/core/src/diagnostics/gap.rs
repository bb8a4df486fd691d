use crate::error::{check_len, invalid, Error, Result};
use crate::linops::shifted_gram_radius;
use crate::solvers::{Problem, StepRule};
use crate::vecops::{dist, dot, norm};

/// Bounded primal and dual balls for the partial gap plus inner-solve
/// settings.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSpec {
    pub primal_center: Vec<f64>,
    pub primal_radius: f64,
    pub dual_center: Vec<f64>,
    pub dual_radius: f64,
    /// Gradient-norm tolerance of the inner primal minimisation.
    pub inner_tol: f64,
    pub inner_max_iters: usize,
}

impl GapSpec {
    pub fn validate(&self, problem: &Problem) -> Result<()> {
        check_len(
            "gap primal center",
            problem.x_dim(),
            self.primal_center.len(),
        )?;
        check_len("gap dual center", problem.y_dim(), self.dual_center.len())?;
        for (name, r) in [("primal", self.primal_radius), ("dual", self.dual_radius)] {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(invalid(format!(
                    "{name} ball radius must be finite and nonnegative, got {r}"
                )));
            }
        }
        if !(self.inner_tol > 0.0) || self.inner_max_iters == 0 {
            return Err(invalid(
                "inner solve needs a positive tolerance and iteration budget",
            ));
        }
        if problem.g.conj_value(&self.dual_center).is_infinite() {
            return Err(invalid("dual ball center must lie in dom g*"));
        }
        Ok(())
    }

    /// Whether both balls contain `(x, y)`.
    pub fn contains(&self, x: &[f64], y: &[f64]) -> bool {
        dist(x, &self.primal_center) <= self.primal_radius
            && dist(y, &self.dual_center) <= self.dual_radius
    }
}

/// `Q(z~, z) = [f(x~) + <Bx~, y> - g*(y)] - [f(x) + <Bx, y~> - g*(y~)]`.
///
/// Fails when both `y` and `y~` leave `dom g*` (the difference is undefined);
/// otherwise out-of-domain points give `-inf` or `+inf`.
pub fn q_value(
    problem: &Problem,
    x_tilde: &[f64],
    y_tilde: &[f64],
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    check_len("q_value x~", problem.x_dim(), x_tilde.len())?;
    check_len("q_value x", problem.x_dim(), x.len())?;
    check_len("q_value y~", problem.y_dim(), y_tilde.len())?;
    check_len("q_value y", problem.y_dim(), y.len())?;
    let conj_y = problem.g.conj_value(y);
    let conj_yt = problem.g.conj_value(y_tilde);
    match (conj_y.is_infinite(), conj_yt.is_infinite()) {
        (true, true) => Err(invalid("Q undefined: both dual points lie outside dom g*")),
        (true, false) => Ok(f64::NEG_INFINITY),
        (false, true) => Ok(f64::INFINITY),
        (false, false) => {
            let bxt = problem.b.apply(x_tilde)?;
            let bx = problem.b.apply(x)?;
            let first = problem.f.value(x_tilde) + dot(&bxt, y) - conj_y;
            let second = problem.f.value(x) + dot(&bx, y_tilde) - conj_yt;
            Ok(first - second)
        }
    }
}

/// Partial gap value with the quality flags of its two sub-problems.
#[derive(Debug, Clone, PartialEq)]
pub struct GapEstimate {
    pub value: f64,
    /// `max_{y in B2} f(x~) + <Bx~, y> - g*(y)`.
    pub dual_part: f64,
    /// `min_x f(x) + <Bx, y~> - g*(y~)`, solved without the ball constraint.
    pub primal_part: f64,
    pub maximizer: Vec<f64>,
    pub minimizer: Vec<f64>,
    pub inner_iterations: usize,
    pub inner_converged: bool,
    /// The unconstrained minimiser lies in `B1`, so the primal part is exact.
    pub minimizer_in_ball: bool,
}

impl GapEstimate {
    pub fn certified(&self) -> bool {
        self.inner_converged && self.minimizer_in_ball
    }
}

/// `max <a, y>` over `dom g* ∩ {|y - c| <= r}`. The maximiser lies on the
/// path `t -> proj_dom(c + t a)`, whose distance from `c` is nondecreasing;
/// bisection on `t` finds where it meets the sphere.
fn maximize_linear_over_dual_ball(
    problem: &Problem,
    a: &[f64],
    center: &[f64],
    radius: f64,
) -> Vec<f64> {
    let g = &problem.g;
    let mut y = vec![0.0; a.len()];
    let mut probe = vec![0.0; a.len()];
    let mut at = |t: f64, out: &mut Vec<f64>| {
        for ((p, c), ai) in probe.iter_mut().zip(center).zip(a) {
            *p = c + t * ai;
        }
        g.project_conj_domain(&probe, out);
        dist(out, center)
    };
    if norm(a) == 0.0 || radius == 0.0 {
        return center.to_vec();
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while at(hi, &mut y) < radius {
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 {
            // Domain bounded inside the ball in every direction that matters.
            return y;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid, &mut y) <= radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(lo, &mut y);
    y
}

/// Accelerated gradient with adaptive restart on `h(x) = f(x) + <x, w>`,
/// stopped on `|grad h| <= tol`.
fn minimize_tilted(
    problem: &Problem,
    w: &[f64],
    start: &[f64],
    tol: f64,
    max_iters: usize,
) -> (Vec<f64>, usize, bool) {
    let l = problem.lipschitz();
    let d = w.len();
    let mut x = start.to_vec();
    let mut x_prev = start.to_vec();
    let mut point = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let mut next = vec![0.0; d];
    let mut t = 1.0f64;
    for it in 1..=max_iters {
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for ((p, xi), xp) in point.iter_mut().zip(&x).zip(&x_prev) {
            *p = xi + beta * (xi - xp);
        }
        problem.f.gradient_into(&point, &mut grad);
        for (gi, wi) in grad.iter_mut().zip(w) {
            *gi += wi;
        }
        if norm(&grad) <= tol {
            return (point, it, true);
        }
        for ((n, p), gi) in next.iter_mut().zip(&point).zip(&grad) {
            *n = p - gi / l;
        }
        let restart = grad
            .iter()
            .zip(next.iter().zip(&x))
            .map(|(gi, (n, xi))| gi * (n - xi))
            .sum::<f64>()
            > 0.0;
        std::mem::swap(&mut x_prev, &mut x);
        std::mem::swap(&mut x, &mut next);
        t = if restart { 1.0 } else { t_next };
        if restart {
            x_prev.copy_from_slice(&x);
        }
    }
    (x, max_iters, false)
}

/// `max_{z in B1 x B2} Q(z~, z)`. The dual half is exact; the primal half
/// minimises over all of `R^d` and reports whether the minimiser landed in
/// `B1`. `warm_start` seeds the inner solve.
pub fn partial_gap(
    problem: &Problem,
    x_tilde: &[f64],
    y_tilde: &[f64],
    spec: &GapSpec,
    warm_start: Option<&[f64]>,
) -> Result<GapEstimate> {
    spec.validate(problem)?;
    check_len("partial_gap x~", problem.x_dim(), x_tilde.len())?;
    check_len("partial_gap y~", problem.y_dim(), y_tilde.len())?;
    let conj_yt = problem.g.conj_value(y_tilde);
    if conj_yt.is_infinite() {
        return Err(invalid("partial gap needs y~ in dom g*"));
    }

    let bx = problem.b.apply(x_tilde)?;
    let maximizer =
        maximize_linear_over_dual_ball(problem, &bx, &spec.dual_center, spec.dual_radius);
    let dual_part =
        problem.f.value(x_tilde) + dot(&bx, &maximizer) - problem.g.conj_value(&maximizer);

    let w = problem.b.adjoint_apply(y_tilde)?;
    let (minimizer, inner_iterations, inner_converged) = if problem.lipschitz() > 0.0 {
        let start = warm_start.unwrap_or(&spec.primal_center);
        check_len("partial_gap warm start", problem.x_dim(), start.len())?;
        minimize_tilted(problem, &w, start, spec.inner_tol, spec.inner_max_iters)
    } else {
        // Affine objective: minimise over the ball itself.
        let nw = norm(&w);
        let x = spec
            .primal_center
            .iter()
            .zip(&w)
            .map(|(c, wi)| {
                if nw > 0.0 {
                    c - spec.primal_radius * wi / nw
                } else {
                    *c
                }
            })
            .collect();
        (x, 0, true)
    };
    let primal_part = problem.f.value(&minimizer) + dot(&w, &minimizer) - conj_yt;
    let minimizer_in_ball =
        dist(&minimizer, &spec.primal_center) <= spec.primal_radius * (1.0 + 1e-12);

    Ok(GapEstimate {
        value: dual_part - primal_part,
        dual_part,
        primal_part,
        maximizer,
        minimizer,
        inner_iterations,
        inner_converged,
        minimizer_in_ball,
    })
}

/// Right-hand side of the accelerated-method gap bound
/// `theta_k^2/(2 gamma_k) Omega1 + gamma_k/2 * rho_max(I - lambda BB^T)/lambda * Omega2`
/// with `theta_k = 2/(k+1)`.
pub fn certificate_bound(
    k: usize,
    gamma_k: f64,
    lambda: f64,
    shifted_radius: f64,
    omega1: f64,
    omega2: f64,
) -> f64 {
    let theta = 2.0 / (k as f64 + 1.0);
    theta * theta / (2.0 * gamma_k) * omega1 + 0.5 * gamma_k * shifted_radius / lambda * omega2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateEntry {
    pub k: usize,
    pub gap: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub entries: Vec<CertificateEntry>,
    /// `rho_max(I - lambda B B^T)` used in the bound.
    pub shifted_radius: f64,
    pub omega1: f64,
    pub omega2: f64,
}

impl CertificateReport {
    pub fn pass_rate(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.iter().filter(|e| e.holds).count() as f64 / self.entries.len() as f64
    }

    pub fn all_hold(&self) -> bool {
        !self.entries.is_empty() && self.entries.iter().all(|e| e.holds)
    }
}

/// Compares measured gaps of the aggregates `(x^ag_{k+1}, y^ag_{k+1})`,
/// given as `(k, gap)`, against the bound of the schedule `step`.
pub fn certificate_check(
    problem: &Problem,
    gaps: &[(usize, f64)],
    step: StepRule,
    lambda: f64,
    omega1: f64,
    omega2: f64,
) -> Result<CertificateReport> {
    if !(lambda > 0.0) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    if !(omega1 >= 0.0 && omega2 >= 0.0) {
        return Err(invalid("diameters must be nonnegative"));
    }
    let shifted = shifted_gram_radius(problem.b.as_ref(), lambda, 1e-12, 100_000, 0)?;
    if !shifted.converged {
        return Err(Error::NotConverged(format!(
            "rho_max(I - lambda BB^T) estimate stalled at residual {}",
            shifted.residual
        )));
    }
    let shifted_radius = shifted.value.max(0.0);
    let l = problem.lipschitz();
    let entries = gaps
        .iter()
        .map(|&(k, gap)| {
            let gamma = match step {
                StepRule::Decaying { c } => 1.0 / (l + c * k as f64),
                StepRule::Constant(g) => g,
            };
            let bound = certificate_bound(k, gamma, lambda, shifted_radius, omega1, omega2);
            CertificateEntry {
                k,
                gap,
                bound,
                holds: gap <= bound * (1.0 + 1e-9) + 1e-14,
            }
        })
        .collect();
    Ok(CertificateReport {
        entries,
        shifted_radius,
        omega1,
        omega2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{L1Norm, SquaredNorm, ZeroProx, ZeroSmooth};
    use crate::linops::{DenseMatrix, Identity};
    use std::sync::Arc;

    fn l1_problem(mu: f64) -> Problem {
        let b = Arc::new(DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.5, -1.0]]).unwrap());
        Problem::new(
            Arc::new(SquaredNorm::new(2, 1.0).unwrap()),
            Arc::new(L1Norm::new(mu).unwrap()),
            b,
        )
        .unwrap()
    }

    #[test]
    fn q_vanishes_on_the_diagonal() {
        let p = l1_problem(1.0);
        let (x, y) = ([0.3, -2.0], [0.5, -1.0]);
        assert_eq!(q_value(&p, &x, &y, &x, &y).unwrap(), 0.0);
    }

    #[test]
    fn q_with_zero_f_and_b() {
        let b = Arc::new(DenseMatrix::zeros(2, 2));
        let p = Problem::new(
            Arc::new(ZeroSmooth::new(2)),
            Arc::new(L1Norm::new(1.0).unwrap()),
            b,
        )
        .unwrap();
        let q = q_value(&p, &[1.0, 2.0], &[0.5, 0.5], &[3.0, 4.0], &[0.1, -0.2]).unwrap();
        assert_eq!(q, 0.0);
        assert_eq!(
            q_value(&p, &[1.0, 2.0], &[0.5, 0.5], &[3.0, 4.0], &[2.0, 0.0]).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(
            q_value(&p, &[1.0, 2.0], &[5.0, 0.5], &[3.0, 4.0], &[0.0, 0.0]).unwrap(),
            f64::INFINITY
        );
        assert!(q_value(&p, &[1.0, 2.0], &[5.0, 0.5], &[3.0, 4.0], &[2.0, 0.0]).is_err());
    }

    #[test]
    fn dual_maximizer_on_box_and_ball() {
        let p = l1_problem(1.0);
        // Ball inactive: box corner is within reach.
        let y = maximize_linear_over_dual_ball(&p, &[1.0, -3.0], &[0.0, 0.0], 10.0);
        assert!(dist(&y, &[1.0, -1.0]) < 1e-12);
        // Ball active: radius 0.5 along (1, 0).
        let y = maximize_linear_over_dual_ball(&p, &[2.0, 0.0], &[0.0, 0.0], 0.5);
        assert!(dist(&y, &[0.5, 0.0]) < 1e-12);
        // Ball and box both active.
        let y = maximize_linear_over_dual_ball(&p, &[1.0, 0.2], &[0.0, 0.0], 1.2);
        let expect = [1.0, (1.2f64 * 1.2 - 1.0).sqrt()];
        assert!(dist(&y, &expect) < 1e-9, "{y:?}");
    }

    #[test]
    fn gap_zero_at_saddle_point() {
        // f = |x|^2/2, g = 0, B = I: saddle point (0, 0), dom g* = {0}.
        let p = Problem::new(
            Arc::new(SquaredNorm::new(2, 1.0).unwrap()),
            Arc::new(ZeroProx),
            Arc::new(Identity::new(2)),
        )
        .unwrap();
        let spec = GapSpec {
            primal_center: vec![0.0; 2],
            primal_radius: 1.0,
            dual_center: vec![0.0; 2],
            dual_radius: 1.0,
            inner_tol: 1e-12,
            inner_max_iters: 1000,
        };
        let est = partial_gap(&p, &[0.0, 0.0], &[0.0, 0.0], &spec, None).unwrap();
        assert!(est.value.abs() < 1e-14);
        assert!(est.certified());
        let est = partial_gap(&p, &[0.6, 0.0], &[0.0, 0.0], &spec, None).unwrap();
        assert!((est.value - 0.18).abs() < 1e-12);
    }

    #[test]
    fn dual_center_outside_domain_rejected() {
        let p = l1_problem(1.0);
        let spec = GapSpec {
            primal_center: vec![0.0; 2],
            primal_radius: 1.0,
            dual_center: vec![3.0, 0.0],
            dual_radius: 1.0,
            inner_tol: 1e-10,
            inner_max_iters: 100,
        };
        assert!(partial_gap(&p, &[0.0, 0.0], &[0.0, 0.0], &spec, None).is_err());
    }

    #[test]
    fn certificate_bound_terms() {
        // Second term vanishes when I - lambda BB^T = 0.
        assert_eq!(
            certificate_bound(3, 0.5, 1.0, 0.0, 2.0, 7.0),
            0.25 / 1.0 * 2.0
        );
        assert_eq!(
            certificate_bound(1, 0.5, 2.0, 1.0, 0.0, 4.0),
            0.5 * 0.5 * 0.5 * 4.0
        );
        assert_eq!(certificate_bound(5, 0.1, 1.0, 0.7, 0.0, 0.0), 0.0);
    }
}
