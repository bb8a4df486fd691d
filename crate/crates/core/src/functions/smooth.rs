use std::fmt;
use std::sync::Arc;

use crate::error::{check_len, invalid, Result};
use crate::linops::{power_method, GramMode, LinearMap};
use crate::vecops::{dot, norm};

use super::{LIPSCHITZ_MAX_ITERS, LIPSCHITZ_TOL};

/// Differentiable convex `f` with an `L_f`-Lipschitz gradient.
pub trait SmoothTerm: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);
    fn lipschitz(&self) -> f64;

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("gradient", self.dim(), x.len())?;
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(x, &mut g);
        Ok(g)
    }
}

/// `f = 0`.
#[derive(Debug, Clone, Copy)]
pub struct ZeroSmooth {
    dim: usize,
}

impl ZeroSmooth {
    pub fn new(dim: usize) -> Self {
        ZeroSmooth { dim }
    }
}

impl SmoothTerm for ZeroSmooth {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn gradient_into(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn lipschitz(&self) -> f64 {
        0.0
    }
}

/// `f(x) = (w/2) |x|^2`.
#[derive(Debug, Clone, Copy)]
pub struct SquaredNorm {
    dim: usize,
    weight: f64,
}

impl SquaredNorm {
    pub fn new(dim: usize, weight: f64) -> Result<Self> {
        if !(weight >= 0.0) {
            return Err(invalid(format!(
                "squared-norm weight must be nonnegative, got {weight}"
            )));
        }
        Ok(SquaredNorm { dim, weight })
    }
}

impl SmoothTerm for SquaredNorm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.weight * dot(x, x)
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, xi) in out.iter_mut().zip(x) {
            *o = self.weight * xi;
        }
    }
    fn lipschitz(&self) -> f64 {
        self.weight
    }
}

/// `f(x) = 1/2 |A x - y|^2`, `L_f = rho_max(A^T A)`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    op: Arc<dyn LinearMap>,
    target: Vec<f64>,
    lipschitz: f64,
}

impl LeastSquares {
    /// Estimates `L_f` with the power method.
    pub fn new(op: Arc<dyn LinearMap>, target: Vec<f64>) -> Result<Self> {
        check_len("least squares target", op.out_dim(), target.len())?;
        let est = power_method(
            op.as_ref(),
            GramMode::BtB,
            LIPSCHITZ_TOL,
            LIPSCHITZ_MAX_ITERS,
            0,
        )?;
        Ok(LeastSquares {
            op,
            target,
            lipschitz: est.value,
        })
    }

    /// Uses a caller-supplied Lipschitz constant.
    pub fn with_lipschitz(
        op: Arc<dyn LinearMap>,
        target: Vec<f64>,
        lipschitz: f64,
    ) -> Result<Self> {
        check_len("least squares target", op.out_dim(), target.len())?;
        if !(lipschitz >= 0.0) {
            return Err(invalid("Lipschitz constant must be nonnegative"));
        }
        Ok(LeastSquares {
            op,
            target,
            lipschitz,
        })
    }

    pub fn operator(&self) -> &Arc<dyn LinearMap> {
        &self.op
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.op.out_dim()];
        self.op.apply_into(x, &mut r);
        for (ri, yi) in r.iter_mut().zip(&self.target) {
            *ri -= yi;
        }
        r
    }
}

impl SmoothTerm for LeastSquares {
    fn dim(&self) -> usize {
        self.op.in_dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let r = self.residual(x);
        0.5 * dot(&r, &r)
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let r = self.residual(x);
        self.op.adjoint_into(&r, out);
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// Regularised logistic loss
/// `f(x) = (1/N) sum_i log(1 + exp(-b_i s_i^T x)) + (mu1/2) |x|^2`
/// with `L_f = rho_max(S^T S) / (4N) + mu1`.
#[derive(Debug, Clone)]
pub struct Logistic {
    samples: Arc<dyn LinearMap>,
    labels: Vec<f64>,
    mu1: f64,
    lipschitz: f64,
}

impl Logistic {
    pub fn new(samples: Arc<dyn LinearMap>, labels: Vec<f64>, mu1: f64) -> Result<Self> {
        check_len("logistic labels", samples.out_dim(), labels.len())?;
        if labels.is_empty() {
            return Err(invalid("logistic loss needs at least one sample"));
        }
        if let Some(bad) = labels.iter().find(|&&b| b != 1.0 && b != -1.0) {
            return Err(invalid(format!(
                "logistic labels must be -1 or +1, found {bad}"
            )));
        }
        if !(mu1 >= 0.0) {
            return Err(invalid(format!("mu1 must be nonnegative, got {mu1}")));
        }
        let est = power_method(
            samples.as_ref(),
            GramMode::BtB,
            LIPSCHITZ_TOL,
            LIPSCHITZ_MAX_ITERS,
            0,
        )?;
        let lipschitz = est.value / (4.0 * labels.len() as f64) + mu1;
        Ok(Logistic {
            samples,
            labels,
            mu1,
            lipschitz,
        })
    }

    pub fn samples(&self) -> &Arc<dyn LinearMap> {
        &self.samples
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }
}

/// `log(1 + exp(-m))` without overflow.
fn log1p_exp_neg(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

/// Logistic function `1 / (1 + exp(-t))` without overflow.
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl SmoothTerm for Logistic {
    fn dim(&self) -> usize {
        self.samples.in_dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut margins = vec![0.0; self.labels.len()];
        self.samples.apply_into(x, &mut margins);
        let n = self.labels.len() as f64;
        let loss: f64 = margins
            .iter()
            .zip(&self.labels)
            .map(|(m, b)| log1p_exp_neg(b * m))
            .sum();
        let nx = norm(x);
        loss / n + 0.5 * self.mu1 * nx * nx
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let mut weights = vec![0.0; self.labels.len()];
        self.samples.apply_into(x, &mut weights);
        let n = self.labels.len() as f64;
        for (w, b) in weights.iter_mut().zip(&self.labels) {
            *w = -b * sigmoid(-b * *w) / n;
        }
        self.samples.adjoint_into(&weights, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o += self.mu1 * xi;
        }
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}
