use crate::error::{check_len, invalid, Result};
use crate::functions::ProxTerm;
use crate::linops::{power_method, GramMode, LinearMap, MapKind};
use crate::vecops::dist;

/// Outcome of the inner fixed-point solve for `prox_{gamma g o B}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fp2oResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Last `|v_{k+1} - v_k|`.
    pub residual: f64,
    pub converged: bool,
}

/// Computes `prox_{gamma g o B}(y) = y - lambda B^T v*` where `v*` is the
/// fixed point of `v -> (I - prox_{(gamma/lambda) g})(B y + (I - lambda B B^T) v)`.
/// Requires `0 < lambda < 1/rho_max(B B^T)`; a run that exhausts `max_iters`
/// comes back with `converged = false`.
pub fn fp2o_prox(
    g: &dyn ProxTerm,
    b: &dyn LinearMap,
    y: &[f64],
    gamma: f64,
    lambda: f64,
    tol: f64,
    max_iters: usize,
) -> Result<Fp2oResult> {
    check_len("fp2o_prox", b.in_dim(), y.len())?;
    g.check_dim(b.out_dim())?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(invalid(format!(
            "gamma must be finite and nonnegative, got {gamma}"
        )));
    }
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let rho = match b.kind() {
        MapKind::Identity => 1.0,
        _ => power_method(b, GramMode::BBt, 1e-12, 50_000, 0)?.value,
    };
    if !(lambda > 0.0 && lambda * rho < 1.0) {
        return Err(invalid(format!(
            "lambda must lie in (0, 1/rho_max(BB^T)) with rho_max = {rho}, got {lambda}"
        )));
    }

    let r = b.out_dim();
    let by = b.apply(y)?;
    let mut v = vec![0.0; r];
    let mut next = vec![0.0; r];
    let mut w = vec![0.0; r];
    let mut btv = vec![0.0; y.len()];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        b.adjoint_into(&v, &mut btv);
        b.apply_into(&btv, &mut w);
        for ((wi, byi), vi) in w.iter_mut().zip(&by).zip(&v) {
            *wi = byi + vi - lambda * *wi;
        }
        g.prox_into(&w, gamma / lambda, &mut next);
        for (ni, wi) in next.iter_mut().zip(&w) {
            *ni = wi - *ni;
        }
        residual = dist(&next, &v);
        std::mem::swap(&mut v, &mut next);
        if residual <= tol {
            break;
        }
    }
    b.adjoint_into(&v, &mut btv);
    let x = y
        .iter()
        .zip(&btv)
        .map(|(yi, bi)| yi - lambda * bi)
        .collect();
    Ok(Fp2oResult {
        x,
        iterations,
        residual,
        converged: residual <= tol,
    })
}
