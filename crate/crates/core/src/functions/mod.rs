//! Smooth terms `f` (value, gradient, Lipschitz constant) and prox-friendly
//! terms `g` (value, prox, conjugate prox).

mod prox;
mod smooth;

pub use prox::{moreau_check, GroupL2, L1Norm, ProxTerm, ZeroProx};
pub use smooth::{LeastSquares, Logistic, SmoothTerm, SquaredNorm, ZeroSmooth};

/// Settings for the power iterations that estimate Lipschitz constants.
pub(crate) const LIPSCHITZ_TOL: f64 = 1e-10;
pub(crate) const LIPSCHITZ_MAX_ITERS: usize = 20_000;
