//! Methods that need `prox_{gamma g}` on the primal space, i.e. `B = I`.

use crate::error::Result;
use crate::vecops::{blend_into, convex_comb};

use super::driver::{drive, Monitor, Stepper};
use super::{positive, Problem, RunResult, SolverConfig, StepRule};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PgdParams {
    /// Step size; `1/L_f` when unset.
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FistaParams {
    pub gamma: Option<f64>,
    /// Set to false to force the extrapolation coefficient to zero.
    pub momentum: bool,
}

impl Default for FistaParams {
    fn default() -> Self {
        FistaParams {
            gamma: None,
            momentum: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NagParams {
    pub step: StepRule,
}

fn step_size(problem: &Problem, gamma: Option<f64>) -> Result<f64> {
    match gamma {
        Some(g) => positive("gamma", g),
        None => problem.default_gamma(),
    }
}

/// `out = prox_{gamma g}(point - gamma grad f(point))`.
fn forward_backward(
    problem: &Problem,
    point: &[f64],
    gamma: f64,
    grad: &mut [f64],
    out: &mut [f64],
) {
    problem.f.gradient_into(point, grad);
    for (gi, pi) in grad.iter_mut().zip(point) {
        *gi = pi - gamma * *gi;
    }
    problem.g.prox_into(grad, gamma, out);
}

struct Pgd<'a> {
    problem: &'a Problem,
    gamma: f64,
    x: Vec<f64>,
    next: Vec<f64>,
    grad: Vec<f64>,
}

impl Stepper for Pgd<'_> {
    fn step(&mut self, _k: usize) {
        forward_backward(
            self.problem,
            &self.x,
            self.gamma,
            &mut self.grad,
            &mut self.next,
        );
        std::mem::swap(&mut self.x, &mut self.next);
    }
    fn x(&self) -> &[f64] {
        &self.x
    }
    fn y(&self) -> Option<&[f64]> {
        None
    }
    fn x_out(&self) -> &[f64] {
        &self.x
    }
    fn y_out(&self) -> Option<&[f64]> {
        None
    }
}

/// Proximal gradient descent `x_{k+1} = prox_{gamma g}(x_k - gamma grad f(x_k))`.
pub fn run_pgd(
    problem: &Problem,
    params: &PgdParams,
    config: &SolverConfig,
    monitor: &mut dyn Monitor,
) -> Result<RunResult> {
    config.validate()?;
    problem.require_identity("PGD")?;
    let gamma = step_size(problem, params.gamma)?;
    let x = config.initial_x(problem)?;
    let d = x.len();
    let stepper = Pgd {
        problem,
        gamma,
        x,
        next: vec![0.0; d],
        grad: vec![0.0; d],
    };
    drive("pgd", problem, config, monitor, stepper)
}

struct Fista<'a> {
    problem: &'a Problem,
    gamma: f64,
    momentum: bool,
    x: Vec<f64>,
    x_prev: Vec<f64>,
    point: Vec<f64>,
    grad: Vec<f64>,
}

impl Stepper for Fista<'_> {
    fn step(&mut self, k: usize) {
        let beta = if self.momentum {
            (k as f64 - 1.0) / (k as f64 + 2.0)
        } else {
            0.0
        };
        for ((p, x), xp) in self.point.iter_mut().zip(&self.x).zip(&self.x_prev) {
            *p = x + beta * (x - xp);
        }
        std::mem::swap(&mut self.x, &mut self.x_prev);
        forward_backward(
            self.problem,
            &self.point,
            self.gamma,
            &mut self.grad,
            &mut self.x,
        );
    }
    fn x(&self) -> &[f64] {
        &self.x
    }
    fn y(&self) -> Option<&[f64]> {
        None
    }
    fn x_out(&self) -> &[f64] {
        &self.x
    }
    fn y_out(&self) -> Option<&[f64]> {
        None
    }
}

/// FISTA with extrapolation `x_k + ((k-1)/(k+2)) (x_k - x_{k-1})` and `x_0 = x_1`.
pub fn run_fista(
    problem: &Problem,
    params: &FistaParams,
    config: &SolverConfig,
    monitor: &mut dyn Monitor,
) -> Result<RunResult> {
    config.validate()?;
    problem.require_identity("FISTA")?;
    let gamma = step_size(problem, params.gamma)?;
    let x = config.initial_x(problem)?;
    let d = x.len();
    let stepper = Fista {
        problem,
        gamma,
        momentum: params.momentum,
        x_prev: x.clone(),
        x,
        point: vec![0.0; d],
        grad: vec![0.0; d],
    };
    drive("fista", problem, config, monitor, stepper)
}

struct Nag<'a> {
    problem: &'a Problem,
    step: StepRule,
    lipschitz: f64,
    x: Vec<f64>,
    ag: Vec<f64>,
    md: Vec<f64>,
    grad: Vec<f64>,
    next: Vec<f64>,
}

impl Stepper for Nag<'_> {
    fn step(&mut self, k: usize) {
        let theta = 2.0 / (k as f64 + 1.0);
        let s = self.step.gamma(k, self.lipschitz) / theta;
        convex_comb(theta, &self.ag, &self.x, &mut self.md);
        self.problem.f.gradient_into(&self.md, &mut self.grad);
        for (gi, xi) in self.grad.iter_mut().zip(&self.x) {
            *gi = xi - s * *gi;
        }
        self.problem.g.prox_into(&self.grad, s, &mut self.next);
        std::mem::swap(&mut self.x, &mut self.next);
        blend_into(theta, &mut self.ag, &self.x);
    }
    fn x(&self) -> &[f64] {
        &self.x
    }
    fn y(&self) -> Option<&[f64]> {
        None
    }
    fn x_out(&self) -> &[f64] {
        &self.ag
    }
    fn y_out(&self) -> Option<&[f64]> {
        None
    }
}

/// Nesterov's accelerated gradient with `theta_k = 2/(k+1)`; returns the
/// aggregate sequence.
pub fn run_nag(
    problem: &Problem,
    params: &NagParams,
    config: &SolverConfig,
    monitor: &mut dyn Monitor,
) -> Result<RunResult> {
    config.validate()?;
    problem.require_identity("NAG")?;
    let lipschitz = problem.lipschitz();
    params.step.validate(lipschitz)?;
    let x = config.initial_x(problem)?;
    let d = x.len();
    let stepper = Nag {
        problem,
        step: params.step,
        lipschitz,
        ag: x.clone(),
        x,
        md: vec![0.0; d],
        grad: vec![0.0; d],
        next: vec![0.0; d],
    };
    drive("nag", problem, config, monitor, stepper)
}
