use crate::solvers::{Monitor, Problem, RecordExtras, StepView};
use crate::vecops::dist;

use super::gap::{partial_gap, GapSpec};

type Metric<'a> = Box<dyn FnMut(&[f64]) -> f64 + Send + 'a>;

/// Fills the gap and metric columns of a trace and tracks how far the raw
/// iterates wander from the gap ball centers (for diameter constants).
pub struct DiagnosticMonitor<'a> {
    problem: &'a Problem,
    gap: Option<GapSpec>,
    metric: Option<Metric<'a>>,
    warm: Option<Vec<f64>>,
    max_primal_dist: f64,
    max_dual_dist: f64,
    uncertified: usize,
}

impl<'a> DiagnosticMonitor<'a> {
    pub fn new(problem: &'a Problem) -> Self {
        DiagnosticMonitor {
            problem,
            gap: None,
            metric: None,
            warm: None,
            max_primal_dist: 0.0,
            max_dual_dist: 0.0,
            uncertified: 0,
        }
    }

    pub fn with_gap(mut self, spec: GapSpec) -> Self {
        self.gap = Some(spec);
        self
    }

    /// Metric of the returned primal iterate, e.g. PSNR or test accuracy.
    pub fn with_metric(mut self, metric: impl FnMut(&[f64]) -> f64 + Send + 'a) -> Self {
        self.metric = Some(Box::new(metric));
        self
    }

    /// `max_k |x_k - c1|` over raw primal iterates seen so far (0 without a gap spec).
    pub fn max_primal_dist(&self) -> f64 {
        self.max_primal_dist
    }

    pub fn max_dual_dist(&self) -> f64 {
        self.max_dual_dist
    }

    /// Gap evaluations whose inner solve failed or left the primal ball.
    pub fn uncertified(&self) -> usize {
        self.uncertified
    }

    /// Seeds the diameter tracking with the starting point `(x_1, y_1)`.
    pub fn observe_start(&mut self, x: &[f64], y: &[f64]) {
        if let Some(spec) = &self.gap {
            self.max_primal_dist = self.max_primal_dist.max(dist(x, &spec.primal_center));
            self.max_dual_dist = self.max_dual_dist.max(dist(y, &spec.dual_center));
        }
    }
}

impl Monitor for DiagnosticMonitor<'_> {
    fn on_step(&mut self, view: &StepView<'_>) {
        if let Some(spec) = &self.gap {
            self.max_primal_dist = self.max_primal_dist.max(dist(view.x, &spec.primal_center));
            if let Some(y) = view.y {
                self.max_dual_dist = self.max_dual_dist.max(dist(y, &spec.dual_center));
            }
        }
    }

    fn on_record(&mut self, view: &StepView<'_>) -> RecordExtras {
        let mut extras = RecordExtras::default();
        if let (Some(spec), Some(y)) = (&self.gap, view.y_out) {
            match partial_gap(self.problem, view.x_out, y, spec, self.warm.as_deref()) {
                Ok(est) => {
                    if !est.certified() {
                        self.uncertified += 1;
                    }
                    extras.gap = Some(est.value);
                    self.warm = Some(est.minimizer);
                }
                Err(_) => self.uncertified += 1,
            }
        }
        if let Some(metric) = self.metric.as_mut() {
            extras.metric = Some(metric(view.x_out));
        }
        extras
    }
}
