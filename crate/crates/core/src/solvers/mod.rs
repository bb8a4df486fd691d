//! Fully decoupled first-order iterations sharing one driver loop, trace
//! format and monitor hook.

mod admm;
mod driver;
mod fp2o;
mod pdfp;
mod pdhg;
mod proximal;
mod schedule;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{check_len, invalid, Error, Result};
use crate::functions::{ProxTerm, SmoothTerm};
use crate::linops::{power_method, GramMode, LinearMap, MapKind};

pub use admm::{run_aadmm, run_lp_admm, AadmmGradientPoint, AadmmParams, AadmmStep, LpAdmmParams};
pub use driver::{
    Cadence, Monitor, NoMonitor, RecordExtras, StepView, StopReason, Trace, TraceRecord,
};
pub use fp2o::{fp2o_prox, Fp2oResult};
pub use pdfp::{
    run_apdfp, run_ipdfp, run_pdfp, ApdfpParams, Inertia, IpdfpParams, IpdfpUpdate, PdfpForm,
    PdfpParams, ThetaRule,
};
pub use pdhg::{run_apd, run_lpdhgm, ApdParams, LpdhgmParams};
pub use proximal::{run_fista, run_nag, run_pgd, FistaParams, NagParams, PgdParams};
pub use schedule::{
    apdfp_schedule, check_schedule, schedule_sequences, ClauseReport, ScheduleReport, StepRule,
};

/// `min_x f(x) + g(Bx)` over shared, immutable terms.
#[derive(Debug, Clone)]
pub struct Problem {
    pub f: Arc<dyn SmoothTerm>,
    pub g: Arc<dyn ProxTerm>,
    pub b: Arc<dyn LinearMap>,
    b_norm_sq: f64,
}

impl Problem {
    /// Checks dimensions and estimates `|B|_2^2 = rho_max(B B^T)` with the
    /// power method (exact for the identity).
    pub fn new(
        f: Arc<dyn SmoothTerm>,
        g: Arc<dyn ProxTerm>,
        b: Arc<dyn LinearMap>,
    ) -> Result<Self> {
        let b_norm_sq = match b.kind() {
            MapKind::Identity => 1.0,
            _ => power_method(b.as_ref(), GramMode::BtB, 1e-12, 50_000, 0)?.value,
        };
        Self::with_b_norm_sq(f, g, b, b_norm_sq)
    }

    /// Uses a caller-supplied `rho_max(B B^T)`, e.g. a closed form.
    pub fn with_b_norm_sq(
        f: Arc<dyn SmoothTerm>,
        g: Arc<dyn ProxTerm>,
        b: Arc<dyn LinearMap>,
        b_norm_sq: f64,
    ) -> Result<Self> {
        check_len("problem: f domain vs B input", b.in_dim(), f.dim())?;
        g.check_dim(b.out_dim())?;
        if !(b_norm_sq >= 0.0 && b_norm_sq.is_finite()) {
            return Err(invalid(format!(
                "rho_max(BB^T) must be finite and nonnegative, got {b_norm_sq}"
            )));
        }
        Ok(Problem { f, g, b, b_norm_sq })
    }

    pub fn x_dim(&self) -> usize {
        self.b.in_dim()
    }

    pub fn y_dim(&self) -> usize {
        self.b.out_dim()
    }

    /// `rho_max(B B^T) = |B|_2^2`.
    pub fn b_norm_sq(&self) -> f64 {
        self.b_norm_sq
    }

    pub fn b_norm(&self) -> f64 {
        self.b_norm_sq.sqrt()
    }

    pub fn lipschitz(&self) -> f64 {
        self.f.lipschitz()
    }

    /// `F(x) = f(x) + g(Bx)`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut bx = vec![0.0; self.y_dim()];
        self.b.apply_into(x, &mut bx);
        self.f.value(x) + self.g.value(&bx)
    }

    /// Largest admissible `lambda`, `1 / rho_max(B B^T)`; 1 when `B = 0`.
    pub fn default_lambda(&self) -> f64 {
        if self.b_norm_sq > 0.0 {
            1.0 / self.b_norm_sq
        } else {
            1.0
        }
    }

    fn require_identity(&self, algorithm: &str) -> Result<()> {
        if self.b.kind() == MapKind::Identity {
            Ok(())
        } else {
            Err(invalid(format!(
                "{algorithm} needs B = I; got a {:?} map",
                self.b.kind()
            )))
        }
    }

    fn check_lambda(&self, lambda: f64) -> Result<()> {
        // Power estimates approach rho_max from below, so allow a hair of slack.
        let upper = self.default_lambda() * (1.0 + 1e-9);
        if lambda > 0.0 && lambda <= upper {
            Ok(())
        } else {
            Err(invalid(format!(
                "lambda must lie in (0, 1/rho_max(BB^T)] = (0, {}], got {lambda}",
                self.default_lambda()
            )))
        }
    }

    /// `1 / L_f`, or an error when `f` has no curvature to size a step from.
    fn default_gamma(&self) -> Result<f64> {
        let l = self.lipschitz();
        if l > 0.0 {
            Ok(1.0 / l)
        } else {
            Err(invalid("L_f = 0: supply an explicit step size"))
        }
    }
}

/// Settings shared by every solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop once `|x_{k+1} - x_k| / max(|x_k|, 1e-12)` falls to this level.
    /// `None` always runs `max_iters` iterations.
    pub stop_tol: Option<f64>,
    pub cadence: Cadence,
    pub x0: Option<Vec<f64>>,
    pub y0: Option<Vec<f64>>,
    /// Keep every returned iterate in the trace (memory heavy).
    pub record_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 1000,
            stop_tol: Some(1e-3),
            cadence: Cadence::Every(1),
            x0: None,
            y0: None,
            record_iterates: false,
        }
    }
}

impl SolverConfig {
    pub fn with_max_iters(max_iters: usize) -> Self {
        SolverConfig {
            max_iters,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be at least 1"));
        }
        if let Some(tol) = self.stop_tol {
            if !(tol > 0.0) {
                return Err(invalid(format!("stop_tol must be positive, got {tol}")));
            }
        }
        if let Cadence::Every(0) = self.cadence {
            return Err(invalid("trace cadence must be at least 1"));
        }
        Ok(())
    }

    fn initial_x(&self, problem: &Problem) -> Result<Vec<f64>> {
        match &self.x0 {
            Some(x) => {
                check_len("initial x", problem.x_dim(), x.len())?;
                Ok(x.clone())
            }
            None => Ok(vec![0.0; problem.x_dim()]),
        }
    }

    fn initial_y(&self, problem: &Problem) -> Result<Vec<f64>> {
        match &self.y0 {
            Some(y) => {
                check_len("initial y", problem.y_dim(), y.len())?;
                Ok(y.clone())
            }
            None => Ok(vec![0.0; problem.y_dim()]),
        }
    }
}

/// Final iterate (aggregated for accelerated methods) and its trace.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
    pub trace: Trace,
}

/// Algorithm tag with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    Pgd(PgdParams),
    Fista(FistaParams),
    Nag(NagParams),
    Lpdhgm(LpdhgmParams),
    Apd(ApdParams),
    LpAdmm(LpAdmmParams),
    Aadmm(AadmmParams),
    Pdfp(PdfpParams),
    Ipdfp(IpdfpParams),
    Apdfp(ApdfpParams),
}

impl Algorithm {
    pub const NAMES: [&'static str; 10] = [
        "pgd", "fista", "nag", "lpdhgm", "apd", "lpadmm", "aadmm", "pdfp", "ipdfp", "apdfp",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Pgd(_) => "pgd",
            Algorithm::Fista(_) => "fista",
            Algorithm::Nag(_) => "nag",
            Algorithm::Lpdhgm(_) => "lpdhgm",
            Algorithm::Apd(_) => "apd",
            Algorithm::LpAdmm(_) => "lpadmm",
            Algorithm::Aadmm(_) => "aadmm",
            Algorithm::Pdfp(_) => "pdfp",
            Algorithm::Ipdfp(_) => "ipdfp",
            Algorithm::Apdfp(_) => "apdfp",
        }
    }

    pub fn run(
        &self,
        problem: &Problem,
        config: &SolverConfig,
        monitor: &mut dyn Monitor,
    ) -> Result<RunResult> {
        match self {
            Algorithm::Pgd(p) => run_pgd(problem, p, config, monitor),
            Algorithm::Fista(p) => run_fista(problem, p, config, monitor),
            Algorithm::Nag(p) => run_nag(problem, p, config, monitor),
            Algorithm::Lpdhgm(p) => run_lpdhgm(problem, p, config, monitor),
            Algorithm::Apd(p) => run_apd(problem, p, config, monitor),
            Algorithm::LpAdmm(p) => run_lp_admm(problem, p, config, monitor),
            Algorithm::Aadmm(p) => run_aadmm(problem, p, config, monitor),
            Algorithm::Pdfp(p) => run_pdfp(problem, p, config, monitor),
            Algorithm::Ipdfp(p) => run_ipdfp(problem, p, config, monitor),
            Algorithm::Apdfp(p) => run_apdfp(problem, p, config, monitor),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses a bare name into the algorithm with default parameters.
impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(
            match s
                .trim()
                .to_ascii_lowercase()
                .replace(['-', '_'], "")
                .as_str()
            {
                "pgd" => Algorithm::Pgd(PgdParams::default()),
                "fista" => Algorithm::Fista(FistaParams::default()),
                "nag" => Algorithm::Nag(NagParams::default()),
                "lpdhgm" => Algorithm::Lpdhgm(LpdhgmParams::default()),
                "apd" => Algorithm::Apd(ApdParams::default()),
                "lpadmm" => Algorithm::LpAdmm(LpAdmmParams::default()),
                "aadmm" => Algorithm::Aadmm(AadmmParams::default()),
                "pdfp" => Algorithm::Pdfp(PdfpParams::default()),
                "ipdfp" => Algorithm::Ipdfp(IpdfpParams::default()),
                "apdfp" => Algorithm::Apdfp(ApdfpParams::default()),
                other => {
                    return Err(invalid(format!(
                        "unknown algorithm '{other}' (expected one of {})",
                        Self::NAMES.join(", ")
                    )))
                }
            },
        )
    }
}

/// `out = prox_{sigma g*}(sigma B xbar + y)`; `scratch` has the dual length.
fn dual_prox_step(
    problem: &Problem,
    xbar: &[f64],
    y: &[f64],
    sigma: f64,
    scratch: &mut [f64],
    out: &mut [f64],
) {
    problem.b.apply_into(xbar, scratch);
    for (s, yi) in scratch.iter_mut().zip(y) {
        *s = sigma * *s + yi;
    }
    problem.g.conj_prox_into(scratch, sigma, out);
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}
