//! Fully linearized ADMM variants on `min f(x) + g(z)` s.t. `Bx = z`.

use crate::error::{invalid, Result};
use crate::vecops::{blend_into, convex_comb};

use super::driver::{drive, Monitor, Stepper};
use super::{positive, Problem, RunResult, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpAdmmParams {
    /// `rho = C/|B|`, `gamma = 1/(L_f + rho |B|^2)`.
    pub c: f64,
}

impl Default for LpAdmmParams {
    fn default() -> Self {
        LpAdmmParams { c: 1.0 }
    }
}

/// Primal step rule of the accelerated ADMM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AadmmStep {
    /// `gamma_k = k/(2 L_f + rho k |B|^2)`.
    #[default]
    DoubledLipschitz,
    /// `gamma_k = k/(2/L_f + rho k |B|^2)`; unstable once `gamma_k > 2/L_f`.
    InverseLipschitz,
}

/// Where the gradient of `f` is evaluated in the accelerated ADMM x-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AadmmGradientPoint {
    /// The interpolated point `(1 - theta_k) x^ag_k + theta_k x_k`.
    #[default]
    Interpolated,
    /// The current iterate `x_k`.
    Iterate,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AadmmParams {
    /// Penalty; `1/|B|` when unset.
    pub rho: Option<f64>,
    pub step: AadmmStep,
    pub gradient_point: AadmmGradientPoint,
}

/// Dual-space and primal-space buffers shared by both ADMM steppers.
struct Buffers {
    bx: Vec<f64>,
    w: Vec<f64>,
    z_next: Vec<f64>,
    grad: Vec<f64>,
    coupling: Vec<f64>,
}

impl Buffers {
    fn new(d: usize, r: usize) -> Self {
        Buffers {
            bx: vec![0.0; r],
            w: vec![0.0; r],
            z_next: vec![0.0; r],
            grad: vec![0.0; d],
            coupling: vec![0.0; d],
        }
    }
}

/// `coupling = B^T (sigma (Bx - z) + y)`.
fn coupling(problem: &Problem, x: &[f64], z: &[f64], y: &[f64], sigma: f64, buf: &mut Buffers) {
    problem.b.apply_into(x, &mut buf.bx);
    for ((w, (bx, zi)), yi) in buf.w.iter_mut().zip(buf.bx.iter().zip(z)).zip(y) {
        *w = sigma * (bx - zi) + yi;
    }
    problem.b.adjoint_into(&buf.w, &mut buf.coupling);
}

/// `z <- prox_{g/rho}(Bx + y/rho)`, then `y <- y + rho (Bx - z)`.
fn z_and_dual_update(
    problem: &Problem,
    x: &[f64],
    rho: f64,
    z: &mut Vec<f64>,
    y: &mut [f64],
    buf: &mut Buffers,
) {
    problem.b.apply_into(x, &mut buf.bx);
    for ((w, bx), yi) in buf.w.iter_mut().zip(&buf.bx).zip(y.iter()) {
        *w = bx + yi / rho;
    }
    problem.g.prox_into(&buf.w, 1.0 / rho, &mut buf.z_next);
    std::mem::swap(z, &mut buf.z_next);
    for ((yi, bx), zi) in y.iter_mut().zip(&buf.bx).zip(z.iter()) {
        *yi += rho * (bx - zi);
    }
}

fn initial_split(problem: &Problem, x: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; problem.y_dim()];
    problem.b.apply_into(x, &mut z);
    z
}

struct LpAdmm<'a> {
    problem: &'a Problem,
    rho: f64,
    gamma: f64,
    x: Vec<f64>,
    z: Vec<f64>,
    y: Vec<f64>,
    buf: Buffers,
}

impl Stepper for LpAdmm<'_> {
    fn step(&mut self, _k: usize) {
        let p = self.problem;
        coupling(p, &self.x, &self.z, &self.y, self.rho, &mut self.buf);
        p.f.gradient_into(&self.x, &mut self.buf.grad);
        for ((x, g), c) in self
            .x
            .iter_mut()
            .zip(&self.buf.grad)
            .zip(&self.buf.coupling)
        {
            *x -= self.gamma * (g + c);
        }
        z_and_dual_update(
            p,
            &self.x,
            self.rho,
            &mut self.z,
            &mut self.y,
            &mut self.buf,
        );
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

/// Linearized preconditioned ADMM with `z_1 = B x_1`. The multiplier update
/// is `y_{k+1} = y_k + rho (B x_{k+1} - z_{k+1})`.
pub fn run_lp_admm(
    problem: &Problem,
    params: &LpAdmmParams,
    config: &SolverConfig,
    monitor: &mut dyn Monitor,
) -> Result<RunResult> {
    config.validate()?;
    let c = positive("LP-ADMM constant C", params.c)?;
    let (l, b) = (problem.lipschitz(), problem.b_norm());
    let rho = if b > 0.0 { c / b } else { c };
    let gamma = 1.0 / (l + rho * b * b);
    if !gamma.is_finite() {
        return Err(invalid("LP-ADMM needs L_f > 0 or B != 0"));
    }
    let x = config.initial_x(problem)?;
    let y = config.initial_y(problem)?;
    let stepper = LpAdmm {
        problem,
        rho,
        gamma,
        z: initial_split(problem, &x),
        buf: Buffers::new(x.len(), y.len()),
        x,
        y,
    };
    drive("lpadmm", problem, config, monitor, stepper)
}

struct Aadmm<'a> {
    problem: &'a Problem,
    rho: f64,
    step_rule: AadmmStep,
    at_interpolated: bool,
    lipschitz: f64,
    b_norm_sq: f64,
    x: Vec<f64>,
    ag: Vec<f64>,
    md: Vec<f64>,
    z: Vec<f64>,
    z_ag: Vec<f64>,
    y: Vec<f64>,
    buf: Buffers,
}

impl Aadmm<'_> {
    fn gamma(&self, k: f64) -> f64 {
        let curvature = match self.step_rule {
            AadmmStep::DoubledLipschitz => 2.0 * self.lipschitz,
            AadmmStep::InverseLipschitz => 2.0 / self.lipschitz,
        };
        k / (curvature + self.rho * k * self.b_norm_sq)
    }
}

impl Stepper for Aadmm<'_> {
    fn step(&mut self, k: usize) {
        let p = self.problem;
        let kf = k as f64;
        let theta = 2.0 / (kf + 1.0);
        let sigma = (kf - 1.0) * self.rho / kf;
        let gamma = self.gamma(kf);
        convex_comb(theta, &self.ag, &self.x, &mut self.md);
        coupling(p, &self.x, &self.z, &self.y, sigma, &mut self.buf);
        let point = if self.at_interpolated {
            &self.md
        } else {
            &self.x
        };
        p.f.gradient_into(point, &mut self.buf.grad);
        for ((x, g), c) in self
            .x
            .iter_mut()
            .zip(&self.buf.grad)
            .zip(&self.buf.coupling)
        {
            *x -= gamma * (g + c);
        }
        blend_into(theta, &mut self.ag, &self.x);
        z_and_dual_update(
            p,
            &self.x,
            self.rho,
            &mut self.z,
            &mut self.y,
            &mut self.buf,
        );
        blend_into(theta, &mut self.z_ag, &self.z);
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

/// Accelerated linearized ADMM with `sigma_k = (k-1) rho / k`; returns the
/// primal aggregate.
pub fn run_aadmm(
    problem: &Problem,
    params: &AadmmParams,
    config: &SolverConfig,
    monitor: &mut dyn Monitor,
) -> Result<RunResult> {
    config.validate()?;
    let (l, b) = (problem.lipschitz(), problem.b_norm());
    let rho = match params.rho {
        Some(rho) => positive("AADMM penalty rho", rho)?,
        None if b > 0.0 => 1.0 / b,
        None => 1.0,
    };
    if params.step == AadmmStep::InverseLipschitz && !(l > 0.0) {
        return Err(invalid("the 2/L_f step rule needs L_f > 0"));
    }
    if params.step == AadmmStep::DoubledLipschitz && l == 0.0 && b == 0.0 {
        return Err(invalid("AADMM needs L_f > 0 or B != 0"));
    }
    let x = config.initial_x(problem)?;
    let y = config.initial_y(problem)?;
    let z = initial_split(problem, &x);
    let stepper = Aadmm {
        problem,
        rho,
        step_rule: params.step,
        at_interpolated: params.gradient_point == AadmmGradientPoint::Interpolated,
        lipschitz: l,
        b_norm_sq: problem.b_norm_sq(),
        ag: x.clone(),
        md: vec![0.0; x.len()],
        z_ag: z.clone(),
        z,
        buf: Buffers::new(x.len(), y.len()),
        x,
        y,
    };
    drive("aadmm", problem, config, monitor, stepper)
}
