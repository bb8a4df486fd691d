use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LinearMap;
use crate::error::{invalid, Result};
use crate::vecops::{dot, norm, scale};

/// Which Gram operator the power method iterates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramMode {
    /// `B^T B`, acting on the input space.
    BtB,
    /// `B B^T`, acting on the output space.
    BBt,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    /// Estimate of the largest eigenvalue.
    pub value: f64,
    pub iterations: usize,
    /// `|lambda_t - lambda_{t-1}| / max(1, lambda_t)` at return.
    pub residual: f64,
    pub converged: bool,
}

/// Power iteration for the largest eigenvalue of a symmetric positive
/// semidefinite operator given as a closure `out = M v`.
///
/// The start vector is drawn uniformly from `[-1, 1]^dim` with a ChaCha8
/// stream seeded by `seed`, so results are reproducible.
pub fn power_method_symmetric<F>(
    dim: usize,
    mut op: F,
    tol: f64,
    max_iters: usize,
    seed: u64,
) -> Result<SpectralEstimate>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if !(tol > 0.0) {
        return Err(invalid(format!(
            "power method tolerance must be positive, got {tol}"
        )));
    }
    if max_iters == 0 {
        return Err(invalid("power method needs at least one iteration"));
    }
    if dim == 0 {
        return Ok(SpectralEstimate {
            value: 0.0,
            iterations: 0,
            residual: 0.0,
            converged: true,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nv = norm(&v);
    scale(1.0 / nv, &mut v);
    let mut w = vec![0.0; dim];

    let mut prev = f64::NAN;
    let mut residual = f64::INFINITY;
    for t in 1..=max_iters {
        op(&v, &mut w);
        let lambda = dot(&v, &w).max(0.0);
        let nw = norm(&w);
        if nw == 0.0 {
            return Ok(SpectralEstimate {
                value: 0.0,
                iterations: t,
                residual: 0.0,
                converged: true,
            });
        }
        if t > 1 {
            residual = (lambda - prev).abs() / lambda.max(1.0);
            if residual <= tol {
                return Ok(SpectralEstimate {
                    value: lambda,
                    iterations: t,
                    residual,
                    converged: true,
                });
            }
        }
        prev = lambda;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    Ok(SpectralEstimate {
        value: prev,
        iterations: max_iters,
        residual,
        converged: false,
    })
}

/// Largest eigenvalue of `B^T B` or `B B^T`.
pub fn power_method(
    map: &dyn LinearMap,
    mode: GramMode,
    tol: f64,
    max_iters: usize,
    seed: u64,
) -> Result<SpectralEstimate> {
    match mode {
        GramMode::BtB => {
            let mut tmp = vec![0.0; map.out_dim()];
            power_method_symmetric(
                map.in_dim(),
                |v, out| {
                    map.apply_into(v, &mut tmp);
                    map.adjoint_into(&tmp, out);
                },
                tol,
                max_iters,
                seed,
            )
        }
        GramMode::BBt => {
            let mut tmp = vec![0.0; map.in_dim()];
            power_method_symmetric(
                map.out_dim(),
                |v, out| {
                    map.adjoint_into(v, &mut tmp);
                    map.apply_into(&tmp, out);
                },
                tol,
                max_iters,
                seed,
            )
        }
    }
}

/// Largest eigenvalue of `I - lambda B B^T`, which is positive semidefinite
/// whenever `0 < lambda <= 1 / rho_max(B B^T)`.
pub fn shifted_gram_radius(
    map: &dyn LinearMap,
    lambda: f64,
    tol: f64,
    max_iters: usize,
    seed: u64,
) -> Result<SpectralEstimate> {
    let mut tmp = vec![0.0; map.in_dim()];
    power_method_symmetric(
        map.out_dim(),
        |v, out| {
            map.adjoint_into(v, &mut tmp);
            map.apply_into(&tmp, out);
            for (o, vi) in out.iter_mut().zip(v) {
                *o = vi - lambda * *o;
            }
        },
        tol,
        max_iters,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{DenseMatrix, Grad2D, Identity};

    /// Jacobi eigenvalue sweep on a small symmetric matrix; independent of
    /// the power iteration.
    #[allow(clippy::needless_range_loop)]
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..100 {
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[i][i]).collect()
    }

    #[test]
    fn identity_has_unit_radius() {
        for dim in [1, 5, 40] {
            let est = power_method(&Identity::new(dim), GramMode::BtB, 1e-10, 100, 0).unwrap();
            assert!((est.value - 1.0).abs() < 1e-8);
            assert!(est.converged);
        }
    }

    #[test]
    fn diagonal_matches_jacobi_oracle() {
        let d = DenseMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 5.0],
        ])
        .unwrap();
        let gram = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 4.0, 0.0],
            vec![0.0, 0.0, 25.0],
        ];
        let oracle = jacobi_eigenvalues(gram).into_iter().fold(0.0, f64::max);
        assert_eq!(oracle, 25.0);
        let est = power_method(&d, GramMode::BtB, 1e-14, 1000, 4).unwrap();
        assert!((est.value - oracle).abs() < 1e-6);
        assert!(est.residual <= 1e-14);
    }

    #[test]
    fn dense_gram_matches_jacobi_oracle_both_modes() {
        let rows = vec![vec![1.0, 2.0, 0.5], vec![-1.0, 0.3, 2.0]];
        let m = DenseMatrix::from_rows(&rows).unwrap();
        let mut bbt = vec![vec![0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                bbt[i][j] = (0..3).map(|k| rows[i][k] * rows[j][k]).sum();
            }
        }
        let oracle = jacobi_eigenvalues(bbt).into_iter().fold(0.0, f64::max);
        let a = power_method(&m, GramMode::BBt, 1e-14, 5000, 1).unwrap();
        let b = power_method(&m, GramMode::BtB, 1e-14, 5000, 2).unwrap();
        assert!((a.value - oracle).abs() < 1e-8);
        assert!((b.value - oracle).abs() < 1e-8);
    }

    #[test]
    fn grad2d_matches_closed_form() {
        let g = Grad2D::new(16).unwrap();
        let est = power_method(&g, GramMode::BtB, 1e-12, 20000, 0).unwrap();
        assert!((est.value - g.gram_spectral_radius()).abs() < 1e-3);
        assert!(est.value <= 8.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let g = Grad2D::new(8).unwrap();
        let a = power_method(&g, GramMode::BtB, 1e-6, 50, 11).unwrap();
        let b = power_method(&g, GramMode::BtB, 1e-6, 50, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let g = Grad2D::new(32).unwrap();
        let est = power_method(&g, GramMode::BtB, 1e-15, 3, 0).unwrap();
        assert!(!est.converged);
        assert_eq!(est.iterations, 3);
    }

    #[test]
    fn rejects_bad_arguments() {
        let id = Identity::new(2);
        assert!(power_method(&id, GramMode::BtB, 0.0, 10, 0).is_err());
        assert!(power_method(&id, GramMode::BtB, 1e-6, 0, 0).is_err());
    }

    #[test]
    fn shifted_gram_vanishes_for_orthogonal_rows() {
        // B B^T = 4 I, lambda = 1/4 gives I - lambda B B^T = 0.
        let b = DenseMatrix::from_rows(&[vec![2.0, 0.0, 0.0], vec![0.0, 0.0, 2.0]]).unwrap();
        let est = shifted_gram_radius(&b, 0.25, 1e-12, 100, 0).unwrap();
        assert!(est.value.abs() < 1e-14);
    }
}
