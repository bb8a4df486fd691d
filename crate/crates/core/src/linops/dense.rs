use super::{LinearMap, MapKind};
use crate::error::{invalid, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "dense matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid("ragged rows in dense matrix"));
        }
        Ok(DenseMatrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl LinearMap for DenseMatrix {
    fn in_dim(&self) -> usize {
        self.cols
    }
    fn out_dim(&self) -> usize {
        self.rows
    }
    fn kind(&self) -> MapKind {
        MapKind::Dense
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = crate::vecops::dot(self.row(i), x);
        }
    }

    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                crate::vecops::axpy(yi, self.row(i), out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::adjoint_mismatch;

    fn brute_matvec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; m.len()];
        for i in 0..m.len() {
            for j in 0..x.len() {
                out[i] += m[i][j] * x[j];
            }
        }
        out
    }

    #[test]
    fn two_by_two_products() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let m = DenseMatrix::from_rows(&rows).unwrap();
        let x = [1.0, 1.0];
        let expected = brute_matvec(&rows, &x);
        assert_eq!(expected, vec![3.0, 7.0]);
        assert_eq!(m.apply(&x).unwrap(), expected);

        let transposed = vec![vec![1.0, 3.0], vec![2.0, 4.0]];
        let expected_t = brute_matvec(&transposed, &[1.0, 0.0]);
        assert_eq!(expected_t, vec![1.0, 2.0]);
        assert_eq!(m.adjoint_apply(&[1.0, 0.0]).unwrap(), expected_t);
    }

    #[test]
    fn zero_vector_maps_to_zero() {
        let m = DenseMatrix::new(3, 2, (0..6).map(f64::from).collect()).unwrap();
        assert_eq!(m.apply(&[0.0, 0.0]).unwrap(), vec![0.0; 3]);
        assert!(adjoint_mismatch(&m, 20, 10.0, 1) < 1e-12);
    }

    #[test]
    fn rejects_wrong_entry_count() {
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
