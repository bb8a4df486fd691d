use crate::error::{invalid, Result};

/// Tolerance on dimensionless slacks.
const SLACK_TOL: f64 = 1e-12;

/// `(theta_k, gamma_k) = (2/(k+1), 1/(L_f + c k))`, admitting `c = 0`.
pub fn apdfp_schedule(k: usize, lipschitz: f64, c: f64) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(invalid("schedule index starts at k = 1"));
    }
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(invalid(format!(
            "L_f must be positive and finite, got {lipschitz}"
        )));
    }
    if !(0.0..lipschitz).contains(&c) {
        return Err(invalid(format!(
            "c must lie in [0, L_f) = [0, {lipschitz}), got {c}"
        )));
    }
    let k = k as f64;
    Ok((2.0 / (k + 1.0), 1.0 / (lipschitz + c * k)))
}

/// Worst slack of one step-size condition; negative means violated.
#[derive(Debug, Clone, PartialEq)]
pub struct ClauseReport {
    pub name: &'static str,
    pub worst_slack: f64,
    /// 1-based index `k` where the worst slack occurs.
    pub worst_k: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    pub clauses: Vec<ClauseReport>,
}

impl ScheduleReport {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }
}

struct Worst {
    slack: f64,
    k: usize,
}

impl Worst {
    fn new() -> Self {
        Worst {
            slack: f64::INFINITY,
            k: 1,
        }
    }

    fn update(&mut self, k: usize, slack: f64) {
        // NaN slack counts as a violation.
        let slack = if slack.is_nan() {
            f64::NEG_INFINITY
        } else {
            slack
        };
        if slack < self.slack {
            self.slack = slack;
            self.k = k;
        }
    }

    fn report(self, name: &'static str, tol: f64) -> ClauseReport {
        ClauseReport {
            name,
            worst_slack: self.slack,
            worst_k: self.k,
            passed: self.slack >= -tol,
        }
    }
}

/// Checks the step-size conditions for the accelerated fixed-point method:
///
/// 1. `0 < gamma_k <= 1/L_f`
/// 2. `gamma_{k+1}/gamma_k <= theta_{k+1}^2 / (theta_k^2 (1 - theta_{k+1}))`
/// 3. `gamma_k/gamma_{k+1} <= 1 / (1 - theta_{k+1})`
/// 4. `gamma_k^2/theta_k^2` nondecreasing and bounded
/// 5. `theta_1 = 1`
///
/// A right-hand side with a zero denominator is `+inf`. Clause 1 slack is in
/// step-size units, the others are relative.
pub fn check_schedule(theta: &[f64], gamma: &[f64], lipschitz: f64) -> Result<ScheduleReport> {
    if theta.len() != gamma.len() || theta.is_empty() {
        return Err(invalid(format!(
            "schedule sequences must be non-empty and of equal length, got {} and {}",
            theta.len(),
            gamma.len()
        )));
    }
    if !(lipschitz > 0.0) {
        return Err(invalid(format!("L_f must be positive, got {lipschitz}")));
    }
    let n = theta.len();
    let ratio_bound = |num: f64, den: f64| if den == 0.0 { f64::INFINITY } else { num / den };

    let mut step = Worst::new();
    for (i, &g) in gamma.iter().enumerate() {
        step.update(i + 1, g.min(1.0 / lipschitz - g));
    }

    let mut growth = Worst::new();
    let mut shrink = Worst::new();
    let mut monotone = Worst::new();
    for i in 0..n - 1 {
        let (t0, t1, g0, g1) = (theta[i], theta[i + 1], gamma[i], gamma[i + 1]);
        let rhs2 = ratio_bound(t1 * t1, t0 * t0 * (1.0 - t1));
        growth.update(i + 1, rhs2 - g1 / g0);
        let rhs3 = ratio_bound(1.0, 1.0 - t1);
        shrink.update(i + 1, rhs3 - g0 / g1);
        let (q0, q1) = ((g0 / t0).powi(2), (g1 / t1).powi(2));
        monotone.update(i + 1, (q1 - q0) / q0.abs().max(f64::MIN_POSITIVE));
    }
    let q_first = (gamma[0] / theta[0]).powi(2);
    let q_last = (gamma[n - 1] / theta[n - 1]).powi(2);
    if !(q_last / q_first).is_finite() {
        monotone.update(n, f64::NEG_INFINITY);
    }

    let mut first = Worst::new();
    first.update(1, -(theta[0] - 1.0).abs());

    Ok(ScheduleReport {
        clauses: vec![
            step.report("0 < gamma_k <= 1/L_f", SLACK_TOL / lipschitz),
            growth.report(
                "gamma_{k+1}/gamma_k <= theta_{k+1}^2/(theta_k^2 (1-theta_{k+1}))",
                SLACK_TOL,
            ),
            shrink.report("gamma_k/gamma_{k+1} <= 1/(1-theta_{k+1})", SLACK_TOL),
            monotone.report("gamma_k^2/theta_k^2 nondecreasing and bounded", SLACK_TOL),
            first.report("theta_1 = 1", 0.0),
        ],
    })
}

/// Builds the `K` leading terms of the standard schedule.
pub fn schedule_sequences(k_max: usize, lipschitz: f64, c: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut theta = Vec::with_capacity(k_max);
    let mut gamma = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let (t, g) = apdfp_schedule(k, lipschitz, c)?;
        theta.push(t);
        gamma.push(g);
    }
    Ok((theta, gamma))
}


/// Step sequence `gamma_k` for the accelerated methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `gamma_k = 1/(L_f + c k)`.
    Decaying { c: f64 },
    /// `gamma_k = gamma`.
    Constant(f64),
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Decaying { c: 0.0 }
    }
}

impl StepRule {
    pub(crate) fn validate(&self, lipschitz: f64) -> Result<()> {
        match *self {
            StepRule::Decaying { c } => apdfp_schedule(1, lipschitz, c).map(|_| ()),
            StepRule::Constant(g) if g > 0.0 && g.is_finite() => Ok(()),
            StepRule::Constant(g) => {
                Err(invalid(format!("constant step must be positive, got {g}")))
            }
        }
    }

    pub(crate) fn gamma(&self, k: usize, lipschitz: f64) -> f64 {
        match *self {
            StepRule::Decaying { c } => 1.0 / (lipschitz + c * k as f64),
            StepRule::Constant(g) => g,
        }
    }
}
