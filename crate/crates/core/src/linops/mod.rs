//! Linear maps `B: R^d -> R^r` with explicit adjoints.
//!
//! Every solver touches `B` only through [`LinearMap::apply_into`] and
//! [`LinearMap::adjoint_into`], so dense matrices, sparse matrices, the 2-D
//! forward-difference gradient and the X-ray projector are interchangeable.

mod dense;
mod grad2d;
mod power;
mod sparse;
mod xray;

use std::fmt;
use std::sync::Arc;

use crate::error::{check_len, Result};

pub use dense::DenseMatrix;
pub use grad2d::Grad2D;
pub use power::{
    power_method, power_method_symmetric, shifted_gram_radius, GramMode, SpectralEstimate,
};
pub use sparse::SparseMatrix;
pub use xray::{XRayGeometry, XRayMap};

/// Structural tag of a [`LinearMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Dense,
    Sparse,
    Grad2d,
    XRay,
    Identity,
    Scaled,
}

/// A linear operator with its transpose.
///
/// Implementations are immutable after construction; `apply_into` and
/// `adjoint_into` must be re-entrant so one operator can back several
/// concurrent solver runs.
pub trait LinearMap: Send + Sync + fmt::Debug {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn kind(&self) -> MapKind;

    /// `out = B x`. Lengths are the caller's responsibility.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);

    /// `out = B^T y`. Lengths are the caller's responsibility.
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("apply", self.in_dim(), x.len())?;
        let mut out = vec![0.0; self.out_dim()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    fn adjoint_apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("adjoint_apply", self.out_dim(), y.len())?;
        let mut out = vec![0.0; self.in_dim()];
        self.adjoint_into(y, &mut out);
        Ok(out)
    }
}

impl<T: LinearMap + ?Sized> LinearMap for Arc<T> {
    fn in_dim(&self) -> usize {
        (**self).in_dim()
    }
    fn out_dim(&self) -> usize {
        (**self).out_dim()
    }
    fn kind(&self) -> MapKind {
        (**self).kind()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).apply_into(x, out)
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        (**self).adjoint_into(y, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Identity {
    dim: usize,
}

impl Identity {
    pub fn new(dim: usize) -> Self {
        Identity { dim }
    }
}

impl LinearMap for Identity {
    fn in_dim(&self) -> usize {
        self.dim
    }
    fn out_dim(&self) -> usize {
        self.dim
    }
    fn kind(&self) -> MapKind {
        MapKind::Identity
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
    }
}

/// `factor * inner`.
#[derive(Debug, Clone)]
pub struct Scaled {
    factor: f64,
    inner: Arc<dyn LinearMap>,
}

impl Scaled {
    pub fn new(factor: f64, inner: Arc<dyn LinearMap>) -> Self {
        Scaled { factor, inner }
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }
}

impl LinearMap for Scaled {
    fn in_dim(&self) -> usize {
        self.inner.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.inner.out_dim()
    }
    fn kind(&self) -> MapKind {
        MapKind::Scaled
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.apply_into(x, out);
        crate::vecops::scale(self.factor, out);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.inner.adjoint_into(y, out);
        crate::vecops::scale(self.factor, out);
    }
}

/// Largest relative inner-product discrepancy `|<Bx, y> - <x, B^T y>|`
/// over `trials` random pairs, normalised by `1 + |x| |y| |B|_est`.
///
/// `norm_estimate` is any upper bound on the operator norm; pass `1.0` when
/// unknown.
pub fn adjoint_mismatch(map: &dyn LinearMap, trials: usize, norm_estimate: f64, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut bx = vec![0.0; map.out_dim()];
    let mut bty = vec![0.0; map.in_dim()];
    for _ in 0..trials {
        let x: Vec<f64> = (0..map.in_dim())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let y: Vec<f64> = (0..map.out_dim())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        map.apply_into(&x, &mut bx);
        map.adjoint_into(&y, &mut bty);
        let lhs = crate::vecops::dot(&bx, &y);
        let rhs = crate::vecops::dot(&x, &bty);
        let scale = 1.0 + crate::vecops::norm(&x) * crate::vecops::norm(&y) * norm_estimate;
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    worst
}
