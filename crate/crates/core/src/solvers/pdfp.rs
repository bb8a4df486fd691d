//! Primal-dual fixed-point iterations: plain, inertial and accelerated.

use crate::error::{invalid, Result};
use crate::vecops::{blend_into, convex_comb};

use super::driver::{drive, Monitor, Stepper};
use super::{dual_prox_step, positive, Problem, RunResult, SolverConfig, StepRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PdfpForm {
    /// Dual step through `prox_{(lambda/gamma) g*}`.
    #[default]
    Conjugate,
    /// Dual step through `I - prox_{(gamma/lambda) g}`; the reported dual is
    /// rescaled by `lambda/gamma` to match the conjugate form.
    Primal,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PdfpParams {
    /// `1/rho_max(BB^T)` when unset.
    pub lambda: Option<f64>,
    /// `1/L_f` when unset.
    pub gamma: Option<f64>,
    pub form: PdfpForm,
    /// Admit `gamma` up to `2/L_f` instead of `1/L_f`.
    pub long_step: bool,
}

/// Inertial weight sequence `alpha_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Inertia {
    Zero,
    Constant(f64),
    /// `alpha_k = (k-1)/(k+2)`.
    Fista,
}

impl Inertia {
    fn alpha(&self, k: usize) -> f64 {
        match *self {
            Inertia::Zero => 0.0,
            Inertia::Constant(a) => a,
            Inertia::Fista => (k as f64 - 1.0) / (k as f64 + 2.0),
        }
    }
}

/// Primal update of the inertial method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IpdfpUpdate {
    /// `x_{k+1} = x_k - gamma grad f(x_k) - gamma B^T y_{k+1}`.
    #[default]
    FromIterate,
    /// `x_{k+1} = z_k - gamma grad f(z_k) - gamma B^T y_{k+1}`.
    FromExtrapolated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpdfpParams {
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub inertia: Inertia,
    pub update: IpdfpUpdate,
}

impl Default for IpdfpParams {
    fn default() -> Self {
        IpdfpParams {
            lambda: None,
            gamma: None,
            inertia: Inertia::Constant(0.3),
            update: IpdfpUpdate::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThetaRule {
    /// `theta_k = 2/(k+1)`.
    #[default]
    Nesterov,
    /// `theta_k = 1`: no aggregation.
    One,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ApdfpParams {
    pub lambda: Option<f64>,
    pub step: StepRule,
    pub theta: ThetaRule,
}

fn resolve_lambda(problem: &Problem, lambda: Option<f64>) -> Result<f64> {
    let lambda = lambda.unwrap_or_else(|| problem.default_lambda());
    problem.check_lambda(lambda)?;
    Ok(lambda)
}

fn resolve_gamma(problem: &Problem, gamma: Option<f64>, long_step: bool) -> Result<f64> {
    let l = problem.lipschitz();
    let gamma = match gamma {
        Some(g) => positive("gamma", g)?,
        None => problem.default_gamma()?,
    };
    let factor = if long_step { 2.0 } else { 1.0 };
    if l > 0.0 && gamma > factor / l * (1.0 + 1e-12) {
        return Err(invalid(format!(
            "gamma must not exceed {factor}/L_f = {}, got {gamma}",
            factor / l
        )));
    }
    Ok(gamma)
}

/// Scratch space of one fixed-point step.
struct Work {
    x_bar: Vec<f64>,
    x_next: Vec<f64>,
    bty: Vec<f64>,
    y_next: Vec<f64>,
    dual: Vec<f64>,
}

impl Work {
    fn new(d: usize, r: usize) -> Self {
        Work {
            x_bar: vec![0.0; d],
            x_next: vec![0.0; d],
            bty: vec![0.0; d],
            y_next: vec![0.0; r],
            dual: vec![0.0; r],
        }
    }
}

/// One conjugate-form step:
/// `x_bar = a - s ga - s B^T y`,
/// `y_next = prox_{sigma g*}(sigma B x_bar + anchor)`,
/// `x_next = c - s gc - s B^T y_next`.
#[allow(clippy::too_many_arguments)]
fn fixed_point_step(
    problem: &Problem,
    a: &[f64],
    ga: &[f64],
    y: &[f64],
    anchor: &[f64],
    c: &[f64],
    gc: &[f64],
    s: f64,
    sigma: f64,
    w: &mut Work,
) {
    problem.b.adjoint_into(y, &mut w.bty);
    for (((xb, ai), gi), bi) in w.x_bar.iter_mut().zip(a).zip(ga).zip(&w.bty) {
        *xb = ai - s * gi - s * bi;
    }
    dual_prox_step(problem, &w.x_bar, anchor, sigma, &mut w.dual, &mut w.y_next);
    problem.b.adjoint_into(&w.y_next, &mut w.bty);
    for (((xn, ci), gi), bi) in w.x_next.iter_mut().zip(c).zip(gc).zip(&w.bty) {
        *xn = ci - s * gi - s * bi;
    }
}

struct Pdfp<'a> {
    problem: &'a Problem,
    lambda: f64,
    gamma: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    grad: Vec<f64>,
    w: Work,
}

impl Stepper for Pdfp<'_> {
    fn step(&mut self, _k: usize) {
        self.problem.f.gradient_into(&self.x, &mut self.grad);
        let sigma = self.lambda / self.gamma;
        fixed_point_step(
            self.problem,
            &self.x,
            &self.grad,
            &self.y,
            &self.y,
            &self.x,
            &self.grad,
            self.gamma,
            sigma,
            &mut self.w,
        );
        std::mem::swap(&mut self.x, &mut self.w.x_next);
        std::mem::swap(&mut self.y, &mut self.w.y_next);
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

/// Primal form with `v` the unscaled dual, `y = (lambda/gamma) v`.
struct PdfpPrimal<'a> {
    problem: &'a Problem,
    lambda: f64,
    gamma: f64,
    x: Vec<f64>,
    v: Vec<f64>,
    y: Vec<f64>,
    x_bar: Vec<f64>,
    btv: Vec<f64>,
    w: Vec<f64>,
    prox: Vec<f64>,
}

impl Stepper for PdfpPrimal<'_> {
    fn step(&mut self, _k: usize) {
        let p = self.problem;
        let (lambda, gamma) = (self.lambda, self.gamma);
        p.f.gradient_into(&self.x, &mut self.x_bar);
        for (xb, xi) in self.x_bar.iter_mut().zip(&self.x) {
            *xb = xi - gamma * *xb;
        }
        p.b.adjoint_into(&self.v, &mut self.btv);
        for (bi, xb) in self.btv.iter_mut().zip(&self.x_bar) {
            *bi = xb - lambda * *bi;
        }
        // w = B x_bar + (I - lambda B B^T) v = B (x_bar - lambda B^T v) + v
        p.b.apply_into(&self.btv, &mut self.w);
        for (wi, vi) in self.w.iter_mut().zip(&self.v) {
            *wi += vi;
        }
        p.g.prox_into(&self.w, gamma / lambda, &mut self.prox);
        for ((vi, wi), pi) in self.v.iter_mut().zip(&self.w).zip(&self.prox) {
            *vi = wi - pi;
        }
        p.b.adjoint_into(&self.v, &mut self.btv);
        for ((xi, xb), bi) in self.x.iter_mut().zip(&self.x_bar).zip(&self.btv) {
            *xi = xb - lambda * bi;
        }
        let scale = lambda / gamma;
        for (yi, vi) in self.y.iter_mut().zip(&self.v) {
            *yi = scale * vi;
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

/// Primal-dual fixed-point method with constant `lambda`, `gamma`.
pub fn run_pdfp(
    problem: &Problem,
    params: &PdfpParams,
    config: &SolverConfig,
    monitor: &mut dyn Monitor,
) -> Result<RunResult> {
    config.validate()?;
    let lambda = resolve_lambda(problem, params.lambda)?;
    let gamma = resolve_gamma(problem, params.gamma, params.long_step)?;
    let x = config.initial_x(problem)?;
    let y = config.initial_y(problem)?;
    let (d, r) = (x.len(), y.len());
    match params.form {
        PdfpForm::Conjugate => {
            let stepper = Pdfp {
                problem,
                lambda,
                gamma,
                x,
                y,
                grad: vec![0.0; d],
                w: Work::new(d, r),
            };
            drive("pdfp", problem, config, monitor, stepper)
        }
        PdfpForm::Primal => {
            let v = y.iter().map(|yi| yi * gamma / lambda).collect();
            let stepper = PdfpPrimal {
                problem,
                lambda,
                gamma,
                x,
                v,
                y,
                x_bar: vec![0.0; d],
                btv: vec![0.0; d],
                w: vec![0.0; r],
                prox: vec![0.0; r],
            };
            drive("pdfp", problem, config, monitor, stepper)
        }
    }
}

struct Ipdfp<'a> {
    problem: &'a Problem,
    lambda: f64,
    gamma: f64,
    inertia: Inertia,
    update: IpdfpUpdate,
    x: Vec<f64>,
    x_prev: Vec<f64>,
    y: Vec<f64>,
    y_prev: Vec<f64>,
    z: Vec<f64>,
    v: Vec<f64>,
    dy_bt: Vec<f64>,
    grad_z: Vec<f64>,
    grad_x: Vec<f64>,
    w: Work,
}

impl Stepper for Ipdfp<'_> {
    fn step(&mut self, k: usize) {
        let p = self.problem;
        let alpha = self.inertia.alpha(k);
        for ((zi, xi), xp) in self.z.iter_mut().zip(&self.x).zip(&self.x_prev) {
            *zi = xi + alpha * (xi - xp);
        }
        if alpha == 0.0 {
            self.v.copy_from_slice(&self.y);
        } else {
            // v = y + alpha (I - lambda B B^T)(y - y_prev)
            for ((vi, yi), yp) in self.v.iter_mut().zip(&self.y).zip(&self.y_prev) {
                *vi = yi - yp;
            }
            p.b.adjoint_into(&self.v, &mut self.dy_bt);
            p.b.apply_into(&self.dy_bt, &mut self.w.dual);
            for ((vi, yi), bb) in self.v.iter_mut().zip(&self.y).zip(&self.w.dual) {
                *vi = yi + alpha * (*vi - self.lambda * bb);
            }
        }
        p.f.gradient_into(&self.z, &mut self.grad_z);
        let from_iterate = self.update == IpdfpUpdate::FromIterate;
        if from_iterate {
            p.f.gradient_into(&self.x, &mut self.grad_x);
        }
        let (c, gc) = if from_iterate {
            (&self.x, &self.grad_x)
        } else {
            (&self.z, &self.grad_z)
        };
        fixed_point_step(
            p,
            &self.z,
            &self.grad_z,
            &self.y,
            &self.v,
            c,
            gc,
            self.gamma,
            self.lambda / self.gamma,
            &mut self.w,
        );
        // prev <- current <- next
        std::mem::swap(&mut self.x_prev, &mut self.x);
        std::mem::swap(&mut self.x, &mut self.w.x_next);
        std::mem::swap(&mut self.y_prev, &mut self.y);
        std::mem::swap(&mut self.y, &mut self.w.y_next);
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

/// Inertial PDFP with `x_0 = x_1`, `y_0 = y_1`.
pub fn run_ipdfp(
    problem: &Problem,
    params: &IpdfpParams,
    config: &SolverConfig,
    monitor: &mut dyn Monitor,
) -> Result<RunResult> {
    config.validate()?;
    let lambda = resolve_lambda(problem, params.lambda)?;
    let gamma = resolve_gamma(problem, params.gamma, false)?;
    if let Inertia::Constant(a) = params.inertia {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(invalid(format!(
                "inertial weight must be nonnegative, got {a}"
            )));
        }
    }
    let x = config.initial_x(problem)?;
    let y = config.initial_y(problem)?;
    let (d, r) = (x.len(), y.len());
    let stepper = Ipdfp {
        problem,
        lambda,
        gamma,
        inertia: params.inertia,
        update: params.update,
        x_prev: x.clone(),
        x,
        y_prev: y.clone(),
        y,
        z: vec![0.0; d],
        v: vec![0.0; r],
        dy_bt: vec![0.0; d],
        grad_z: vec![0.0; d],
        grad_x: vec![0.0; d],
        w: Work::new(d, r),
    };
    drive("ipdfp", problem, config, monitor, stepper)
}

struct Apdfp<'a> {
    problem: &'a Problem,
    lambda: f64,
    step: StepRule,
    theta_rule: ThetaRule,
    lipschitz: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    x_ag: Vec<f64>,
    y_ag: Vec<f64>,
    md: Vec<f64>,
    grad: Vec<f64>,
    w: Work,
}

impl Stepper for Apdfp<'_> {
    fn step(&mut self, k: usize) {
        let theta = match self.theta_rule {
            ThetaRule::Nesterov => 2.0 / (k as f64 + 1.0),
            ThetaRule::One => 1.0,
        };
        let s = self.step.gamma(k, self.lipschitz) / theta;
        convex_comb(theta, &self.x_ag, &self.x, &mut self.md);
        self.problem.f.gradient_into(&self.md, &mut self.grad);
        fixed_point_step(
            self.problem,
            &self.x,
            &self.grad,
            &self.y,
            &self.y,
            &self.x,
            &self.grad,
            s,
            self.lambda / s,
            &mut self.w,
        );
        std::mem::swap(&mut self.x, &mut self.w.x_next);
        std::mem::swap(&mut self.y, &mut self.w.y_next);
        blend_into(theta, &mut self.x_ag, &self.x);
        blend_into(theta, &mut self.y_ag, &self.y);
    }
    fn x(&self) -> &[f64] {
        &self.x
    }
    fn y(&self) -> Option<&[f64]> {
        Some(&self.y)
    }
    fn x_out(&self) -> &[f64] {
        &self.x_ag
    }
    fn y_out(&self) -> Option<&[f64]> {
        Some(&self.y_ag)
    }
}

/// Accelerated PDFP. Runs `K = max_iters` iterations and returns the
/// aggregates `(x^ag, y^ag)`.
pub fn run_apdfp(
    problem: &Problem,
    params: &ApdfpParams,
    config: &SolverConfig,
    monitor: &mut dyn Monitor,
) -> Result<RunResult> {
    config.validate()?;
    let lambda = resolve_lambda(problem, params.lambda)?;
    let lipschitz = problem.lipschitz();
    params.step.validate(lipschitz)?;
    let x = config.initial_x(problem)?;
    let y = config.initial_y(problem)?;
    let (d, r) = (x.len(), y.len());
    let stepper = Apdfp {
        problem,
        lambda,
        step: params.step,
        theta_rule: params.theta,
        lipschitz,
        x_ag: x.clone(),
        y_ag: y.clone(),
        x,
        y,
        md: vec![0.0; d],
        grad: vec![0.0; d],
        w: Work::new(d, r),
    };
    drive("apdfp", problem, config, monitor, stepper)
}
