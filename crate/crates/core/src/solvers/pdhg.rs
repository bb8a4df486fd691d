//! Linearized primal-dual hybrid gradient iterations on the saddle form.

use crate::error::{invalid, Result};
use crate::vecops::{blend_into, convex_comb};

use super::driver::{drive, Monitor, Stepper};
use super::{dual_prox_step, positive, Problem, RunResult, SolverConfig};

/// Constant dual step `sigma` and primal step `gamma` (so `alpha = 1`).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LpdhgmParams {
    /// Unset steps default to the positive root `s` of `|B|^2 s^2 + L_f s = 1`.
    pub sigma: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApdParams {
    /// `tau = C/|B|`, `gamma_k = k/(2 L_f + k |B| C)`.
    pub c: f64,
}

impl Default for ApdParams {
    fn default() -> Self {
        ApdParams { c: 1.0 }
    }
}

/// Positive root of `a s^2 + b s = 1`.
fn balanced_step(a: f64, b: f64) -> Result<f64> {
    if a == 0.0 && b == 0.0 {
        return Err(invalid("L_f = 0 and B = 0: supply explicit steps"));
    }
    Ok(2.0 / (b + (b * b + 4.0 * a).sqrt()))
}

struct Lpdhgm<'a> {
    problem: &'a Problem,
    sigma: f64,
    gamma: f64,
    x: Vec<f64>,
    x_bar: Vec<f64>,
    y: Vec<f64>,
    y_next: Vec<f64>,
    grad: Vec<f64>,
    bty: Vec<f64>,
    scratch: Vec<f64>,
}

impl Stepper for Lpdhgm<'_> {
    fn step(&mut self, _k: usize) {
        let p = self.problem;
        dual_prox_step(
            p,
            &self.x_bar,
            &self.y,
            self.sigma,
            &mut self.scratch,
            &mut self.y_next,
        );
        std::mem::swap(&mut self.y, &mut self.y_next);
        p.f.gradient_into(&self.x, &mut self.grad);
        p.b.adjoint_into(&self.y, &mut self.bty);
        for (((x, xb), g), bt) in self
            .x
            .iter_mut()
            .zip(self.x_bar.iter_mut())
            .zip(&self.grad)
            .zip(&self.bty)
        {
            let next = *x - self.gamma * g - self.gamma * bt;
            *xb = next + (next - *x);
            *x = next;
        }
    }
    fn x(&self) -> &[f64] {
        &self.x
    }
    fn y(&self) -> Option<&[f64]> {
        Some(&self.y)
    }
    fn x_out(&self) -> &[f64] {
        &self.x
    }
    fn y_out(&self) -> Option<&[f64]> {
        Some(&self.y)
    }
}

/// Linearized modified PDHG with constant steps. Requires
/// `L_f sigma + |B|^2 gamma sigma <= 1`.
pub fn run_lpdhgm(
    problem: &Problem,
    params: &LpdhgmParams,
    config: &SolverConfig,
    monitor: &mut dyn Monitor,
) -> Result<RunResult> {
    config.validate()?;
    let (l, b2) = (problem.lipschitz(), problem.b_norm_sq());
    let default = || balanced_step(b2, l);
    let sigma = positive("sigma", params.sigma.map_or_else(default, Ok)?)?;
    let gamma = positive("gamma", params.gamma.map_or_else(default, Ok)?)?;
    let lhs = l * sigma + b2 * gamma * sigma;
    if lhs > 1.0 + 1e-12 {
        return Err(invalid(format!(
            "step condition L_f*sigma + |B|^2*gamma*sigma <= 1 violated: {l}*{sigma} + {b2}*{gamma}*{sigma} = {lhs}"
        )));
    }
    let x = config.initial_x(problem)?;
    let y = config.initial_y(problem)?;
    let (d, r) = (x.len(), y.len());
    let stepper = Lpdhgm {
        problem,
        sigma,
        gamma,
        x_bar: x.clone(),
        x,
        y,
        y_next: vec![0.0; r],
        grad: vec![0.0; d],
        bty: vec![0.0; d],
        scratch: vec![0.0; r],
    };
    drive("lpdhgm", problem, config, monitor, stepper)
}

struct Apd<'a> {
    problem: &'a Problem,
    tau: f64,
    two_l: f64,
    bc: f64,
    x: Vec<f64>,
    ag: Vec<f64>,
    x_bar: Vec<f64>,
    md: Vec<f64>,
    y: Vec<f64>,
    y_next: Vec<f64>,
    grad: Vec<f64>,
    bty: Vec<f64>,
    scratch: Vec<f64>,
}

impl Stepper for Apd<'_> {
    fn step(&mut self, k: usize) {
        let p = self.problem;
        let kf = k as f64;
        let theta = 2.0 / (kf + 1.0);
        let gamma = kf / (self.two_l + kf * self.bc);
        let alpha = kf / (kf + 1.0);
        convex_comb(theta, &self.ag, &self.x, &mut self.md);
        dual_prox_step(
            p,
            &self.x_bar,
            &self.y,
            self.tau,
            &mut self.scratch,
            &mut self.y_next,
        );
        std::mem::swap(&mut self.y, &mut self.y_next);
        p.f.gradient_into(&self.md, &mut self.grad);
        p.b.adjoint_into(&self.y, &mut self.bty);
        for (((x, xb), g), bt) in self
            .x
            .iter_mut()
            .zip(self.x_bar.iter_mut())
            .zip(&self.grad)
            .zip(&self.bty)
        {
            let next = *x - gamma * g - gamma * bt;
            *xb = next + alpha * (next - *x);
            *x = next;
        }
        blend_into(theta, &mut self.ag, &self.x);
    }
    fn x(&self) -> &[f64] {
        &self.x
    }
    fn y(&self) -> Option<&[f64]> {
        Some(&self.y)
    }
    fn x_out(&self) -> &[f64] {
        &self.ag
    }
    fn y_out(&self) -> Option<&[f64]> {
        Some(&self.y)
    }
}

/// Accelerated linearized PDHG; returns the primal aggregate. When `B = 0`
/// the dual step is irrelevant and `tau = C`.
pub fn run_apd(
    problem: &Problem,
    params: &ApdParams,
    config: &SolverConfig,
    monitor: &mut dyn Monitor,
) -> Result<RunResult> {
    config.validate()?;
    let c = positive("APD constant C", params.c)?;
    let (l, b) = (problem.lipschitz(), problem.b_norm());
    if l == 0.0 && b == 0.0 {
        return Err(invalid("APD needs L_f > 0 or B != 0"));
    }
    let tau = if b > 0.0 { c / b } else { c };
    let x = config.initial_x(problem)?;
    let y = config.initial_y(problem)?;
    let (d, r) = (x.len(), y.len());
    let stepper = Apd {
        problem,
        tau,
        two_l: 2.0 * l,
        bc: b * c,
        ag: x.clone(),
        x_bar: x.clone(),
        x,
        md: vec![0.0; d],
        y,
        y_next: vec![0.0; r],
        grad: vec![0.0; d],
        bty: vec![0.0; d],
        scratch: vec![0.0; r],
    };
    drive("apd", problem, config, monitor, stepper)
}
