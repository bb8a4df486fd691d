use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::diagnostics::GapSpec;
use crate::error::{invalid, Error, Result};
use crate::functions::{L1Norm, LeastSquares, ProxTerm, ZeroProx};
use crate::linops::{DenseMatrix, LinearMap};
use crate::solvers::Problem;
use crate::vecops::{norm, norm_inf};

/// Accepted fixed-point residual of the delivered reference.
pub const REFERENCE_TOL: f64 = 1e-10;
const ACTIVE_SET_MAX_LOOPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub dim: usize,
    /// Rows of `B`.
    pub rows: usize,
    pub mu: f64,
    /// `sigma_max(C) / sigma_min(C)`; `sigma_max(C) = 1`, so `L_f = 1`.
    pub condition: f64,
    /// `|B|_2`.
    pub b_scale: f64,
    pub seed: u64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            dim: 20,
            rows: 10,
            mu: 1e-4,
            condition: 1e3,
            b_scale: 1e-3,
            seed: 0,
        }
    }
}

/// `1/2 |C x - d|^2 + mu |B x|_1` with a verified saddle point `(x_ref, y_ref)`.
#[derive(Debug, Clone)]
pub struct QuadraticToy {
    pub spec: QuadSpec,
    pub c: Arc<DenseMatrix>,
    pub d: Vec<f64>,
    pub b: Arc<DenseMatrix>,
    pub x_true: Vec<f64>,
    pub x_ref: Vec<f64>,
    pub y_ref: Vec<f64>,
    /// Fixed-point residual of `(x_ref, y_ref)`, sup-norm.
    pub residual: f64,
    b_norm_sq: f64,
}

impl QuadraticToy {
    pub fn lipschitz(&self) -> f64 {
        1.0
    }

    pub fn problem(&self) -> Result<Problem> {
        let f = LeastSquares::with_lipschitz(self.c.clone(), self.d.clone(), self.lipschitz())?;
        let g: Arc<dyn ProxTerm> = if self.spec.mu > 0.0 {
            Arc::new(L1Norm::new(self.spec.mu)?)
        } else {
            Arc::new(ZeroProx)
        };
        Problem::with_b_norm_sq(Arc::new(f), g, self.b.clone(), self.b_norm_sq)
    }

    /// Primal ball around the start `x_1 = 0` reaching twice as far as the
    /// reference; dual ball covering the whole box `[-mu, mu]^r`.
    pub fn gap_spec(&self) -> GapSpec {
        let r = self.spec.rows;
        GapSpec {
            primal_center: vec![0.0; self.spec.dim],
            primal_radius: 2.0 * norm(&self.x_ref),
            dual_center: vec![0.0; r],
            dual_radius: self.spec.mu * (r as f64).sqrt() * (1.0 + 1e-9),
            inner_tol: 1e-11,
            inner_max_iters: 200_000,
        }
    }

    pub fn reference_objective(&self) -> Result<f64> {
        Ok(self.problem()?.objective(&self.x_ref))
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn to_dense(m: &DMatrix<f64>) -> DenseMatrix {
    let mut data = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        data.extend(m.row(i).iter().copied());
    }
    DenseMatrix::new(m.nrows(), m.ncols(), data).expect("shape matches")
}

/// Sup-norm residual of one PDFP step (`gamma = 1/L`, `lambda = 1/|B|^2`)
/// started at `(x, y)`; zero exactly at saddle points.
pub fn fixed_point_residual(problem: &Problem, x: &[f64], y: &[f64]) -> Result<f64> {
    let gamma = 1.0 / problem.lipschitz();
    let lambda = problem.default_lambda();
    let sigma = lambda / gamma;
    let grad = problem.f.gradient(x)?;
    let bty = problem.b.adjoint_apply(y)?;
    let x_bar: Vec<f64> = (0..x.len())
        .map(|i| x[i] - gamma * (grad[i] + bty[i]))
        .collect();
    let bxb = problem.b.apply(&x_bar)?;
    let v: Vec<f64> = bxb.iter().zip(y).map(|(b, yi)| sigma * b + yi).collect();
    let y_next = problem.g.conj_prox(&v, sigma);
    let bty_next = problem.b.adjoint_apply(&y_next)?;
    let x_next: Vec<f64> = (0..x.len())
        .map(|i| x[i] - gamma * (grad[i] + bty_next[i]))
        .collect();
    let dx = x_next
        .iter()
        .zip(x)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let dy = y_next
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(dx.max(dy))
}

/// Solves the optimality system for a guessed zero set `Z` of `Bx` and signs
/// elsewhere:
/// `[C^T C, B_Z^T; B_Z, 0] [x; y_Z] = [C^T d - mu B_{Z^c}^T s; 0]`.
fn solve_active_set(
    ctc: &DMatrix<f64>,
    ctd: &DVector<f64>,
    b: &DMatrix<f64>,
    mu: f64,
    zero: &[bool],
    sign: &[f64],
) -> Option<(DVector<f64>, DVector<f64>)> {
    let d = ctc.nrows();
    let z_rows: Vec<usize> = (0..b.nrows()).filter(|&i| zero[i]).collect();
    let m = d + z_rows.len();
    let mut kkt = DMatrix::zeros(m, m);
    kkt.view_mut((0, 0), (d, d)).copy_from(ctc);
    let mut rhs = DVector::zeros(m);
    rhs.rows_mut(0, d).copy_from(ctd);
    for i in 0..b.nrows() {
        if !zero[i] {
            for j in 0..d {
                rhs[j] -= mu * sign[i] * b[(i, j)];
            }
        }
    }
    for (a, &i) in z_rows.iter().enumerate() {
        for j in 0..d {
            kkt[(d + a, j)] = b[(i, j)];
            kkt[(j, d + a)] = b[(i, j)];
        }
    }
    let sol = kkt.lu().solve(&rhs)?;
    let x = sol.rows(0, d).into_owned();
    let mut y = DVector::zeros(b.nrows());
    for i in 0..b.nrows() {
        if !zero[i] {
            y[i] = mu * sign[i];
        }
    }
    for (a, &i) in z_rows.iter().enumerate() {
        y[i] = sol[d + a];
    }
    Some((x, y))
}

/// Random orthogonal factors and log-spaced singular values give `C`;
/// `B` is Gaussian rescaled to the requested norm. The reference saddle
/// point comes from an active-set solve of the optimality system, accepted
/// only when a fixed-point step moves it by at most `REFERENCE_TOL`.
pub fn make_quadratic_toy(spec: QuadSpec) -> Result<QuadraticToy> {
    let QuadSpec {
        dim,
        rows,
        mu,
        condition,
        b_scale,
        seed,
    } = spec;
    if dim == 0 || dim > 50 {
        return Err(invalid(format!(
            "toy dimension must lie in 1..=50, got {dim}"
        )));
    }
    if rows == 0 || rows > dim {
        return Err(invalid(format!("toy needs 1..=dim rows in B, got {rows}")));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(invalid(format!(
            "mu must be finite and nonnegative, got {mu}"
        )));
    }
    if !(condition >= 1.0 && condition.is_finite()) {
        return Err(invalid(format!(
            "condition number must be at least 1, got {condition}"
        )));
    }
    if !(b_scale >= 0.0 && b_scale.is_finite()) {
        return Err(invalid(format!(
            "B scale must be finite and nonnegative, got {b_scale}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = gaussian(dim, dim, &mut rng).qr().q();
    let v = gaussian(dim, dim, &mut rng).qr().q();
    let sv = DVector::from_fn(dim, |i, _| {
        if dim == 1 {
            1.0
        } else {
            condition.powf(-(i as f64) / (dim as f64 - 1.0))
        }
    });
    let c = &u * DMatrix::from_diagonal(&sv) * v.transpose();
    // Unit weight on every right singular vector keeps the error spectrum
    // flat across scales, so decay rates do not hinge on a lucky draw.
    let signs = DVector::from_fn(dim, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
    let x_true = &v * signs;
    let target = &c * &x_true;

    let mut b = gaussian(rows, dim, &mut rng);
    let raw_norm = b.clone().svd(false, false).singular_values.max();
    b *= b_scale / raw_norm;
    let b_norm_sq = if b_scale > 0.0 {
        b.clone().svd(false, false).singular_values.max().powi(2)
    } else {
        0.0
    };

    let ctc = c.transpose() * &c;
    let ctd = c.transpose() * &target;
    let x_ls = ctc
        .clone()
        .lu()
        .solve(&ctd)
        .ok_or_else(|| Error::NotConverged("singular normal equations".into()))?;

    let (x_ref, y_ref) = if mu == 0.0 || b_scale == 0.0 {
        (x_ls, DVector::zeros(rows))
    } else {
        let bx = &b * &x_ls;
        let mut zero = vec![false; rows];
        let mut sign: Vec<f64> = bx
            .iter()
            .map(|v| if *v >= 0.0 { 1.0 } else { -1.0 })
            .collect();
        let mut found = None;
        for _ in 0..ACTIVE_SET_MAX_LOOPS {
            let (x, y) = solve_active_set(&ctc, &ctd, &b, mu, &zero, &sign)
                .ok_or_else(|| Error::NotConverged("singular active-set system".into()))?;
            let bx = &b * &x;
            // Fix the single worst violation per pass.
            let mut worst: Option<(usize, f64)> = None;
            for i in 0..rows {
                let violation = if zero[i] {
                    y[i].abs() - mu
                } else {
                    -sign[i] * bx[i]
                };
                if violation > 1e-14 * mu.max(b_scale) && worst.is_none_or(|(_, w)| violation > w) {
                    worst = Some((i, violation));
                }
            }
            match worst {
                None => {
                    found = Some((x, y));
                    break;
                }
                Some((i, _)) => {
                    if zero[i] {
                        zero[i] = false;
                        sign[i] = y[i].signum();
                    } else {
                        zero[i] = true;
                    }
                }
            }
        }
        found.ok_or_else(|| Error::NotConverged("active-set reference did not settle".into()))?
    };

    let mut toy = QuadraticToy {
        spec,
        c: Arc::new(to_dense(&c)),
        d: target.iter().copied().collect(),
        b: Arc::new(to_dense(&b)),
        x_true: x_true.iter().copied().collect(),
        x_ref: x_ref.iter().copied().collect(),
        y_ref: y_ref.iter().copied().collect(),
        residual: f64::INFINITY,
        b_norm_sq,
    };
    let problem = toy.problem()?;
    toy.residual = fixed_point_residual(&problem, &toy.x_ref, &toy.y_ref)?;
    let scale = norm_inf(&toy.x_ref).max(1.0);
    if !(toy.residual <= REFERENCE_TOL * scale) {
        return Err(Error::NotConverged(format!(
            "toy reference residual {} exceeds {}",
            toy.residual, REFERENCE_TOL
        )));
    }
    // Sanity: the dual must lie in the box of g*.
    if problem.g.conj_value(&toy.y_ref).is_infinite() {
        return Err(Error::NotConverged(
            "toy reference dual leaves the domain of g*".into(),
        ));
    }
    Ok(toy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecops::dist_inf;

    #[test]
    fn default_toy_is_certified() {
        let toy = make_quadratic_toy(QuadSpec::default()).unwrap();
        assert!(toy.residual <= 1e-10, "{}", toy.residual);
        let p = toy.problem().unwrap();
        assert!((p.b_norm() - 1e-3).abs() < 1e-15);
        assert!(toy.y_ref.iter().all(|y| y.abs() <= 1e-4 * (1.0 + 1e-12)));
    }

    #[test]
    fn singular_values_follow_the_spread() {
        let toy = make_quadratic_toy(QuadSpec::default()).unwrap();
        let c = DMatrix::from_row_slice(20, 20, toy.c.data());
        let s = c.svd(false, false).singular_values;
        assert!((s.max() - 1.0).abs() < 1e-12);
        assert!((s.max() / s.min() - 1e3).abs() < 1e-6);
    }

    #[test]
    fn zero_mu_gives_least_squares() {
        let toy = make_quadratic_toy(QuadSpec {
            mu: 0.0,
            ..QuadSpec::default()
        })
        .unwrap();
        // Normal equations: C^T (C x - d) = 0, and d = C x_true here.
        let p = toy.problem().unwrap();
        let g = p.f.gradient(&toy.x_ref).unwrap();
        assert!(norm_inf(&g) < 1e-10);
        assert!(dist_inf(&toy.x_ref, &toy.x_true) < 1e-8);
    }

    #[test]
    fn zero_scale_decouples() {
        let toy = make_quadratic_toy(QuadSpec {
            b_scale: 0.0,
            ..QuadSpec::default()
        })
        .unwrap();
        assert!(toy.y_ref.iter().all(|&y| y == 0.0));
        assert_eq!(toy.problem().unwrap().b_norm_sq(), 0.0);
    }

    #[test]
    fn larger_penalty_still_certifies() {
        for seed in 0..4 {
            let toy = make_quadratic_toy(QuadSpec {
                mu: 1e-2,
                b_scale: 1.0,
                condition: 10.0,
                seed,
                ..QuadSpec::default()
            })
            .unwrap();
            assert!(toy.residual <= 1e-10);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        for spec in [
            QuadSpec {
                dim: 0,
                ..QuadSpec::default()
            },
            QuadSpec {
                dim: 51,
                ..QuadSpec::default()
            },
            QuadSpec {
                rows: 21,
                ..QuadSpec::default()
            },
            QuadSpec {
                mu: -1.0,
                ..QuadSpec::default()
            },
            QuadSpec {
                condition: 0.5,
                ..QuadSpec::default()
            },
        ] {
            assert!(make_quadratic_toy(spec).is_err());
        }
    }
}
