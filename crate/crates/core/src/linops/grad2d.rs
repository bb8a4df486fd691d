use super::{LinearMap, MapKind};
use crate::error::{invalid, Result};

/// Forward-difference gradient of an `n x n` row-major image.
///
/// Output layout is two stacked channels of length `n*n`: vertical
/// differences `x[i+1][j] - x[i][j]` followed by horizontal differences
/// `x[i][j+1] - x[i][j]`. The last row of the vertical channel and the last
/// column of the horizontal channel are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grad2D {
    n: usize,
}

impl Grad2D {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!(
                "gradient needs an image side of at least 2, got {n}"
            )));
        }
        Ok(Grad2D { n })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    /// Closed-form largest eigenvalue of `grad^T grad` for this boundary
    /// convention: twice the top eigenvalue of the path-graph Laplacian.
    pub fn gram_spectral_radius(&self) -> f64 {
        2.0 * (2.0 + 2.0 * (std::f64::consts::PI / self.n as f64).cos())
    }
}

impl LinearMap for Grad2D {
    fn in_dim(&self) -> usize {
        self.n * self.n
    }
    fn out_dim(&self) -> usize {
        2 * self.n * self.n
    }
    fn kind(&self) -> MapKind {
        MapKind::Grad2d
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        let (vert, horiz) = out.split_at_mut(n * n);
        for i in 0..n {
            for j in 0..n {
                let p = i * n + j;
                vert[p] = if i + 1 < n { x[p + n] - x[p] } else { 0.0 };
                horiz[p] = if j + 1 < n { x[p + 1] - x[p] } else { 0.0 };
            }
        }
    }

    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        let n = self.n;
        let (vert, horiz) = y.split_at(n * n);
        for i in 0..n {
            for j in 0..n {
                let p = i * n + j;
                let mut acc = 0.0;
                if i > 0 {
                    acc += vert[p - n];
                }
                if i + 1 < n {
                    acc -= vert[p];
                }
                if j > 0 {
                    acc += horiz[p - 1];
                }
                if j + 1 < n {
                    acc -= horiz[p];
                }
                out[p] = acc;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::adjoint_mismatch;

    #[test]
    fn two_by_two_hand_example() {
        let g = Grad2D::new(2).unwrap();
        let out = g.apply(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(&out[..4], &[2.0, 2.0, 0.0, 0.0]);
        assert_eq!(&out[4..], &[1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn constant_image_has_zero_gradient() {
        let g = Grad2D::new(4).unwrap();
        assert!(g.apply(&[0.7; 16]).unwrap().iter().all(|&v| v == 0.0));
        assert!(g
            .adjoint_apply(&[0.0; 32])
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn boundary_rows_and_columns_are_zero() {
        let n = 5;
        let g = Grad2D::new(n).unwrap();
        let x: Vec<f64> = (0..n * n).map(|p| ((p * 37) % 11) as f64).collect();
        let out = g.apply(&x).unwrap();
        for j in 0..n {
            assert_eq!(out[(n - 1) * n + j], 0.0);
        }
        for i in 0..n {
            assert_eq!(out[n * n + i * n + n - 1], 0.0);
        }
    }

    #[test]
    fn adjoint_is_consistent() {
        let g = Grad2D::new(8).unwrap();
        assert!(adjoint_mismatch(&g, 20, 8f64.sqrt(), 17) < 1e-10);
    }

    #[test]
    fn rejects_tiny_images() {
        assert!(Grad2D::new(1).is_err());
    }
}
