//! Parallel-beam X-ray transform with exact intersection lengths.
//!
//! The image occupies the square `[-h, h]^2`, `h = n * pixel_size / 2`,
//! centred at the origin. Row `i` of the image is the horizontal strip
//! `y in [h - (i+1) ps, h - i ps]` (row 0 on top) and column `j` is
//! `x in [-h + j ps, -h + (j+1) ps]`.
//!
//! A ray with angle `phi` and detector offset `s` is the line
//! `p(t) = s (cos phi, sin phi) + t (-sin phi, cos phi)`. Lengths are found
//! by merging the sorted parametric crossings with every vertical and
//! horizontal grid line (Siddon's construction) and attributing each
//! segment to the pixel containing its midpoint.

use super::{LinearMap, MapKind, SparseMatrix};
use crate::error::{invalid, Result};

const AXIS_EPS: f64 = 1e-14;

/// Ray layout: one ray per `(angle, offset)` pair, angle-major.
#[derive(Debug, Clone, PartialEq)]
pub struct XRayGeometry {
    pub n: usize,
    pub pixel_size: f64,
    pub angles: Vec<f64>,
    pub offsets: Vec<f64>,
}

impl XRayGeometry {
    /// Uniform angles on `[0, pi)` and `n_det` detector cells covering a
    /// detector line of length `n * sqrt(2)` (the image diagonal).
    pub fn parallel(n: usize, n_angles: usize, n_det: usize) -> Self {
        let angles = (0..n_angles)
            .map(|a| std::f64::consts::PI * a as f64 / n_angles as f64)
            .collect();
        let span = n as f64 * std::f64::consts::SQRT_2;
        let pitch = span / n_det as f64;
        let offsets = (0..n_det)
            .map(|v| -span / 2.0 + (v as f64 + 0.5) * pitch)
            .collect();
        XRayGeometry {
            n,
            pixel_size: 1.0,
            angles,
            offsets,
        }
    }

    pub fn n_rays(&self) -> usize {
        self.angles.len() * self.offsets.len()
    }
}

/// Sparse X-ray projector `A: R^{n*n} -> R^{n_angles * n_det}`.
#[derive(Debug, Clone)]
pub struct XRayMap {
    geometry: XRayGeometry,
    matrix: SparseMatrix,
}

impl XRayMap {
    pub fn new(n: usize, n_angles: usize, n_det: usize) -> Result<Self> {
        if n < 4 {
            return Err(invalid(format!(
                "x-ray image side must be at least 4, got {n}"
            )));
        }
        if n_angles == 0 || n_det == 0 {
            return Err(invalid(
                "x-ray transform needs at least one angle and one detector",
            ));
        }
        Self::from_geometry(XRayGeometry::parallel(n, n_angles, n_det))
    }

    pub fn from_geometry(geometry: XRayGeometry) -> Result<Self> {
        if geometry.n == 0 || !(geometry.pixel_size > 0.0) {
            return Err(invalid(
                "x-ray geometry needs a positive image side and pixel size",
            ));
        }
        let mut triplets = Vec::new();
        let mut row_buf = Vec::new();
        let n_off = geometry.offsets.len();
        for (a, &phi) in geometry.angles.iter().enumerate() {
            for (v, &s) in geometry.offsets.iter().enumerate() {
                row_buf.clear();
                trace_ray(&geometry, phi, s, &mut row_buf);
                let ray = a * n_off + v;
                triplets.extend(row_buf.iter().map(|&(pix, len)| (ray, pix, len)));
            }
        }
        let pixels = geometry.n * geometry.n;
        let matrix = SparseMatrix::from_triplets(geometry.n_rays(), pixels, &triplets)?;
        Ok(XRayMap { geometry, matrix })
    }

    pub fn geometry(&self) -> &XRayGeometry {
        &self.geometry
    }

    /// Explicit `(ray, pixel, length)` storage.
    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }
}

impl LinearMap for XRayMap {
    fn in_dim(&self) -> usize {
        self.matrix.cols()
    }
    fn out_dim(&self) -> usize {
        self.matrix.rows()
    }
    fn kind(&self) -> MapKind {
        MapKind::XRay
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.matrix.apply_into(x, out)
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.matrix.adjoint_into(y, out)
    }
}

/// Appends `(pixel, length)` pairs for one ray.
fn trace_ray(geo: &XRayGeometry, phi: f64, s: f64, out: &mut Vec<(usize, f64)>) {
    let n = geo.n;
    let ps = geo.pixel_size;
    let h = n as f64 * ps / 2.0;
    let (sin, cos) = phi.sin_cos();
    let origin = [s * cos, s * sin];
    let dir = [-sin, cos];

    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    for axis in 0..2 {
        if dir[axis].abs() < AXIS_EPS {
            if origin[axis] <= -h || origin[axis] >= h {
                return;
            }
        } else {
            let t1 = (-h - origin[axis]) / dir[axis];
            let t2 = (h - origin[axis]) / dir[axis];
            t_lo = t_lo.max(t1.min(t2));
            t_hi = t_hi.min(t1.max(t2));
        }
    }
    if !(t_hi - t_lo > 1e-12 * ps) {
        return;
    }

    let mut alphas = Vec::with_capacity(2 * n + 2);
    alphas.push(t_lo);
    alphas.push(t_hi);
    for axis in 0..2 {
        if dir[axis].abs() < AXIS_EPS {
            continue;
        }
        for k in 1..n {
            let plane = -h + k as f64 * ps;
            let t = (plane - origin[axis]) / dir[axis];
            if t > t_lo && t < t_hi {
                alphas.push(t);
            }
        }
    }
    alphas.sort_by(f64::total_cmp);

    for w in alphas.windows(2) {
        let len = w[1] - w[0];
        if len <= 1e-12 * ps {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let px = origin[0] + mid * dir[0];
        let py = origin[1] + mid * dir[1];
        let col = (((px + h) / ps).floor() as isize).clamp(0, n as isize - 1) as usize;
        let row = (((h - py) / ps).floor() as isize).clamp(0, n as isize - 1) as usize;
        out.push((row * n + col, len));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::adjoint_mismatch;

    #[test]
    fn axis_aligned_ray_crosses_full_row() {
        let geo = XRayGeometry {
            n: 4,
            pixel_size: 1.0,
            angles: vec![std::f64::consts::FRAC_PI_2],
            offsets: vec![0.5],
        };
        let a = XRayMap::from_geometry(geo).unwrap();
        let (cols, vals) = a.matrix().row(0);
        // y = 0.5 lies in row 1 (rows count down from y = 2).
        assert_eq!(cols, &[4, 5, 6, 7]);
        for &v in vals {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn vertical_ray_crosses_full_column() {
        let geo = XRayGeometry {
            n: 4,
            pixel_size: 1.0,
            angles: vec![0.0],
            offsets: vec![-1.5],
        };
        let a = XRayMap::from_geometry(geo).unwrap();
        let (cols, vals) = a.matrix().row(0);
        assert_eq!(cols, &[0, 4, 8, 12]);
        assert!(vals.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn diagonal_ray_length_is_the_diagonal() {
        let geo = XRayGeometry {
            n: 4,
            pixel_size: 1.0,
            angles: vec![std::f64::consts::FRAC_PI_4],
            offsets: vec![0.0],
        };
        let a = XRayMap::from_geometry(geo).unwrap();
        let (_, vals) = a.matrix().row(0);
        let total: f64 = vals.iter().sum();
        assert!((total - 4.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn rays_outside_the_grid_are_empty() {
        let geo = XRayGeometry {
            n: 4,
            pixel_size: 1.0,
            angles: vec![0.0, 0.3],
            offsets: vec![2.5, -3.0, 2.0],
        };
        let a = XRayMap::from_geometry(geo).unwrap();
        for ray in [0, 1, 2, 4] {
            assert_eq!(a.matrix().row(ray).0.len(), 0, "ray {ray}");
        }
    }

    #[test]
    fn lengths_are_nonnegative_and_bounded() {
        let a = XRayMap::new(16, 12, 23).unwrap();
        let bound = 16.0 * std::f64::consts::SQRT_2 + 1e-9;
        for r in 0..a.out_dim() {
            let (_, vals) = a.matrix().row(r);
            assert!(vals.iter().all(|&v| v > 0.0));
            assert!(vals.iter().sum::<f64>() <= bound);
        }
    }

    #[test]
    fn zero_image_projects_to_zero() {
        let a = XRayMap::new(8, 5, 8).unwrap();
        assert!(a.apply(&[0.0; 64]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn adjoint_is_consistent() {
        let a = XRayMap::new(16, 10, 16).unwrap();
        assert!(adjoint_mismatch(&a, 10, 40.0, 5) < 1e-9);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(XRayMap::new(3, 4, 4).is_err());
        assert!(XRayMap::new(8, 0, 4).is_err());
        assert!(XRayMap::new(8, 4, 0).is_err());
    }
}
