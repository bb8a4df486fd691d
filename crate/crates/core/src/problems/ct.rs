use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_len, invalid, Result};
use crate::functions::{GroupL2, LeastSquares};
use crate::linops::{Grad2D, LinearMap, XRayMap};
use crate::solvers::Problem;

/// `(intensity, semi-axis x, semi-axis y, center x, center y, rotation deg)`
/// on `[-1, 1]^2` with `y` pointing up. Intensities add where ellipses overlap.
const ELLIPSES: [(f64, f64, f64, f64, f64, f64); 7] = [
    (0.6, 0.85, 0.95, 0.0, 0.0, 0.0),
    (-0.2, 0.75, 0.86, 0.0, -0.02, 0.0),
    (0.5, 0.2, 0.36, -0.3, 0.1, 20.0),
    (-0.3, 0.15, 0.26, 0.34, 0.05, -15.0),
    (0.6, 0.1, 0.1, 0.0, -0.5, 0.0),
    (0.3, 0.09, 0.05, 0.22, 0.56, 0.0),
    (0.2, 0.04, 0.12, -0.05, 0.45, 30.0),
];

/// Piecewise-constant ellipse phantom, `n x n` row-major (row 0 on top),
/// sampled at pixel centers and clamped to `[0, 1]`.
pub fn generate_phantom(n: usize) -> Result<Vec<f64>> {
    if n < 16 {
        return Err(invalid(format!(
            "phantom side must be at least 16, got {n}"
        )));
    }
    let mut img = vec![0.0; n * n];
    for i in 0..n {
        let y = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
        for j in 0..n {
            let x = -1.0 + (2.0 * j as f64 + 1.0) / n as f64;
            let mut v = 0.0;
            for &(intensity, a, b, cx, cy, deg) in &ELLIPSES {
                let (s, c) = deg.to_radians().sin_cos();
                let (dx, dy) = (x - cx, y - cy);
                let u = c * dx + s * dy;
                let w = -s * dx + c * dy;
                if (u / a).powi(2) + (w / b).powi(2) <= 1.0 {
                    v += intensity;
                }
            }
            img[i * n + j] = v.clamp(0.0, 1.0);
        }
    }
    Ok(img)
}

/// `A x0 + eps` with `eps ~ N(0, sigma2)` i.i.d., reproducible by seed.
pub fn simulate_sinogram(
    op: &dyn LinearMap,
    x0: &[f64],
    sigma2: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    check_len("simulate_sinogram", op.in_dim(), x0.len())?;
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(invalid(format!(
            "noise variance must be finite and nonnegative, got {sigma2}"
        )));
    }
    let mut y = op.apply(x0)?;
    if sigma2 > 0.0 {
        let normal = Normal::new(0.0, sigma2.sqrt()).map_err(|e| invalid(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for yi in &mut y {
            *yi += normal.sample(&mut rng);
        }
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtSpec {
    pub n: usize,
    pub n_angles: usize,
    pub n_det: usize,
    pub sigma2: f64,
    pub mu: f64,
    pub seed: u64,
}

impl Default for CtSpec {
    fn default() -> Self {
        CtSpec {
            n: 64,
            n_angles: 90,
            n_det: 64,
            sigma2: 0.03,
            mu: 1e-3,
            seed: 0,
        }
    }
}

/// Phantom, projector, noisy sinogram and the TV-regularised least-squares
/// problem `1/2 |A x - y|^2 + mu |grad x|_{2,1}`.
#[derive(Debug, Clone)]
pub struct CtInstance {
    pub spec: CtSpec,
    pub phantom: Vec<f64>,
    pub op: Arc<XRayMap>,
    pub grad: Arc<Grad2D>,
    pub sinogram: Vec<f64>,
}

impl CtInstance {
    pub fn new(spec: CtSpec) -> Result<Self> {
        if !(spec.mu > 0.0) {
            return Err(invalid(format!(
                "regularisation weight must be positive, got {}",
                spec.mu
            )));
        }
        let phantom = generate_phantom(spec.n)?;
        let op = Arc::new(XRayMap::new(spec.n, spec.n_angles, spec.n_det)?);
        let sinogram = simulate_sinogram(op.as_ref(), &phantom, spec.sigma2, spec.seed)?;
        let grad = Arc::new(Grad2D::new(spec.n)?);
        Ok(CtInstance {
            spec,
            phantom,
            op,
            grad,
            sinogram,
        })
    }

    /// The reconstruction problem; `rho_max(grad grad^T)` uses its closed form.
    pub fn problem(&self) -> Result<Problem> {
        let f = LeastSquares::new(self.op.clone(), self.sinogram.clone())?;
        let g = GroupL2::new(self.spec.mu, 2)?;
        Problem::with_b_norm_sq(
            Arc::new(f),
            Arc::new(g),
            self.grad.clone(),
            self.grad.gram_spectral_radius(),
        )
    }
}
