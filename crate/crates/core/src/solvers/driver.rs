use std::time::{Duration, Instant};

use crate::error::{invalid, Error, Result};
use crate::vecops::{all_finite, dist, norm};

use super::{Problem, RunResult, SolverConfig};

/// Which iterations produce a trace record. The final iteration is always
/// recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cadence {
    /// `k = 1` and every multiple of `n`.
    Every(usize),
    /// Roughly `per_decade` records per power of ten.
    LogSpaced { per_decade: usize },
}

impl Cadence {
    pub fn hits(&self, k: usize) -> bool {
        match *self {
            Cadence::Every(n) => k == 1 || k.is_multiple_of(n),
            Cadence::LogSpaced { per_decade } => {
                if k <= 1 {
                    return true;
                }
                let bucket = |i: usize| (per_decade as f64 * (i as f64).log10()).floor() as i64;
                bucket(k) > bucket(k - 1)
            }
        }
    }
}

/// Read-only view of the run after iteration `k`.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a> {
    pub k: usize,
    /// Current primal iterate `x_{k+1}`.
    pub x: &'a [f64],
    /// Current dual iterate `y_{k+1}`, when the method has one.
    pub y: Option<&'a [f64]>,
    /// Returned primal sequence (the aggregate for accelerated methods).
    pub x_out: &'a [f64],
    pub y_out: Option<&'a [f64]>,
}

/// Optional columns attached to a record.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RecordExtras {
    pub gap: Option<f64>,
    pub metric: Option<f64>,
}

/// Hook into a run: sees every iteration and fills the optional columns of
/// traced ones. Time spent here is excluded from `wall_ms`.
pub trait Monitor {
    fn on_step(&mut self, _view: &StepView<'_>) {}

    fn on_record(&mut self, _view: &StepView<'_>) -> RecordExtras {
        RecordExtras::default()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoMonitor;

impl Monitor for NoMonitor {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub objective: f64,
    pub rel_err: f64,
    pub gap: Option<f64>,
    pub metric: Option<f64>,
    /// Cumulative solver time in milliseconds, monitor time excluded.
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Tolerance,
    MaxIters,
}

/// Append-only run history.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub algorithm: String,
    records: Vec<TraceRecord>,
    iterates: Vec<Vec<f64>>,
    pub iterations: usize,
    pub stop: StopReason,
}

impl Trace {
    pub fn new(algorithm: impl Into<String>) -> Self {
        Trace {
            algorithm: algorithm.into(),
            records: Vec::new(),
            iterates: Vec::new(),
            iterations: 0,
            stop: StopReason::MaxIters,
        }
    }

    /// Appends a record; iteration numbers must strictly increase.
    pub fn push(&mut self, record: TraceRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.iter <= last.iter {
                return Err(invalid(format!(
                    "trace iterations must increase: {} after {}",
                    record.iter, last.iter
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Returned iterates after each iteration, if recording was requested.
    pub fn iterates(&self) -> &[Vec<f64>] {
        &self.iterates
    }

    /// First recorded iteration satisfying `pred`.
    pub fn first_iter_where(&self, pred: impl Fn(&TraceRecord) -> bool) -> Option<usize> {
        self.records.iter().find(|r| pred(r)).map(|r| r.iter)
    }
}

/// One algorithm's state machine; `step(k)` advances from iterate `k` to `k+1`.
pub(crate) trait Stepper {
    fn step(&mut self, k: usize);
    fn x(&self) -> &[f64];
    fn y(&self) -> Option<&[f64]>;
    fn x_out(&self) -> &[f64];
    fn y_out(&self) -> Option<&[f64]>;
}

fn view<S: Stepper>(s: &S, k: usize) -> StepView<'_> {
    StepView {
        k,
        x: s.x(),
        y: s.y(),
        x_out: s.x_out(),
        y_out: s.y_out(),
    }
}

fn finite<S: Stepper>(s: &S) -> bool {
    all_finite(s.x())
        && all_finite(s.x_out())
        && s.y().is_none_or(all_finite)
        && s.y_out().is_none_or(all_finite)
}

pub(crate) fn drive<S: Stepper>(
    name: &str,
    problem: &Problem,
    config: &SolverConfig,
    monitor: &mut dyn Monitor,
    mut stepper: S,
) -> Result<RunResult> {
    let mut trace = Trace::new(name);
    let mut prev = stepper.x_out().to_vec();
    let mut solver_time = Duration::ZERO;

    for k in 1..=config.max_iters {
        let started = Instant::now();
        stepper.step(k);
        solver_time += started.elapsed();
        if !finite(&stepper) {
            return Err(Error::NonFinite { iteration: k });
        }

        let out = stepper.x_out();
        let rel_err = dist(out, &prev) / norm(&prev).max(1e-12);
        let converged = config.stop_tol.is_some_and(|tol| rel_err <= tol);
        let done = converged || k == config.max_iters;

        let v = view(&stepper, k);
        monitor.on_step(&v);
        if done || config.cadence.hits(k) {
            let extras = monitor.on_record(&v);
            trace.push(TraceRecord {
                iter: k,
                objective: problem.objective(out),
                rel_err,
                gap: extras.gap,
                metric: extras.metric,
                wall_ms: solver_time.as_secs_f64() * 1e3,
            })?;
        }
        if config.record_iterates {
            trace.iterates.push(out.to_vec());
        }
        prev.copy_from_slice(out);
        trace.iterations = k;
        if converged {
            trace.stop = StopReason::Tolerance;
            break;
        }
    }

    Ok(RunResult {
        x: stepper.x_out().to_vec(),
        y: stepper.y_out().map(<[f64]>::to_vec),
        trace,
    })
}
