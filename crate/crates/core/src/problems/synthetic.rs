use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::error::{invalid, Result};
use crate::linops::SparseMatrix;

/// Dense Gaussian features where each odd column is a noisy copy of the
/// preceding even one, so correlation graphs have edges to find. Labels are
/// `sign(<w, s_i>)` for a hidden `w` (also returned), so the data are
/// linearly separable.
pub fn synthetic_classification(n: usize, d: usize, seed: u64) -> Result<(Dataset, Vec<f64>)> {
    if n == 0 || d == 0 {
        return Err(invalid(format!(
            "synthetic data needs n, d >= 1, got {n} x {d}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let w: Vec<f64> = (0..d).map(|_| normal()).collect();
    let mut triplets = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    let mut row = vec![0.0; d];
    for i in 0..n {
        for j in 0..d {
            row[j] = if j % 2 == 1 {
                row[j - 1] + 0.2 * normal()
            } else {
                normal()
            };
        }
        let margin: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
        labels.push(if margin >= 0.0 { 1.0 } else { -1.0 });
        triplets.extend(row.iter().enumerate().map(|(j, &v)| (i, j, v)));
    }
    let samples = SparseMatrix::from_triplets(n, d, &triplets)?;
    Ok((Dataset::new(samples, labels)?, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::accuracy;
    use crate::problems::build_graph_matrix;

    #[test]
    fn separable_by_hidden_weights() {
        let (ds, w) = synthetic_classification(200, 10, 1).unwrap();
        assert_eq!(ds.len(), 200);
        assert_eq!(accuracy(&w, &ds.samples, &ds.labels).unwrap(), 1.0);
    }

    #[test]
    fn paired_features_are_correlated() {
        let (ds, _) = synthetic_classification(500, 6, 2).unwrap();
        let g = build_graph_matrix(&ds, 0.8).unwrap();
        assert_eq!(g.rows(), 3);
    }

    #[test]
    fn deterministic() {
        let a = synthetic_classification(20, 4, 9).unwrap();
        let b = synthetic_classification(20, 4, 9).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }
}
