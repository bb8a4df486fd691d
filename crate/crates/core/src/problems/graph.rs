use std::io::{BufRead, Write};

use crate::error::{invalid, Error, Result};
use crate::linops::SparseMatrix;

use super::Dataset;

/// Pearson correlations of the feature columns; zero-variance features get
/// correlation 0 with everything.
fn feature_correlations(ds: &Dataset) -> Vec<f64> {
    let (n, d) = (ds.len() as f64, ds.n_features());
    let mut sum = vec![0.0; d];
    let mut cross = vec![0.0; d * d];
    for i in 0..ds.len() {
        let (cols, vals) = ds.samples.row(i);
        for (a, (&ca, &va)) in cols.iter().zip(vals).enumerate() {
            sum[ca] += va;
            for (&cb, &vb) in cols[a..].iter().zip(&vals[a..]) {
                cross[ca * d + cb] += va * vb;
            }
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let cov = |a: usize, b: usize| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        cross[lo * d + hi] / n - mean[a] * mean[b]
    };
    let sd: Vec<f64> = (0..d).map(|j| cov(j, j).max(0.0).sqrt()).collect();
    let mut corr = vec![0.0; d * d];
    for a in 0..d {
        for b in a + 1..d {
            // Relative cutoff keeps round-off in constant columns from
            // posing as variance.
            let tiny = |j: usize| sd[j] <= 1e-12 * mean[j].abs().max(1.0);
            if tiny(a) || tiny(b) {
                continue;
            }
            let r = (cov(a, b) / (sd[a] * sd[b])).clamp(-1.0, 1.0);
            corr[a * d + b] = r;
            corr[b * d + a] = r;
        }
    }
    corr
}

/// Edge-incidence matrix of the feature graph: one row `e_i - e_j` for every
/// pair `i < j` with `|corr(i, j)| > threshold`, in lexicographic order.
pub fn build_graph_matrix(ds: &Dataset, threshold: f64) -> Result<SparseMatrix> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(invalid(format!(
            "correlation threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let d = ds.n_features();
    let corr = feature_correlations(ds);
    let mut triplets = Vec::new();
    let mut row = 0;
    for i in 0..d {
        for j in i + 1..d {
            if corr[i * d + j].abs() > threshold {
                triplets.push((row, i, 1.0));
                triplets.push((row, j, -1.0));
                row += 1;
            }
        }
    }
    SparseMatrix::from_triplets(row, d, &triplets)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads a sparse matrix from a `rows cols nnz` header followed by `nnz`
/// lines of 0-based `row col value`. `#` lines and blank lines are skipped.
pub fn read_triplets<R: BufRead>(reader: R) -> Result<SparseMatrix> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|e| parse_err(line_no, format!("read failed: {e}")))?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(
                line_no,
                format!("expected 3 fields, got {}", fields.len()),
            ));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_err(line_no, format!("bad integer '{s}'")))
        };
        match header {
            None => header = Some((int(fields[0])?, int(fields[1])?, int(fields[2])?)),
            Some((rows, cols, _)) => {
                let (r, c) = (int(fields[0])?, int(fields[1])?);
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad value '{}'", fields[2])))?;
                if r >= rows || c >= cols {
                    return Err(parse_err(
                        line_no,
                        format!("entry ({r}, {c}) outside {rows}x{cols}"),
                    ));
                }
                if !v.is_finite() {
                    return Err(parse_err(line_no, "non-finite value"));
                }
                triplets.push((r, c, v));
            }
        }
    }
    let (rows, cols, nnz) = header.ok_or_else(|| parse_err(0, "missing 'rows cols nnz' header"))?;
    if triplets.len() != nnz {
        return Err(parse_err(
            0,
            format!("header promises {nnz} entries, found {}", triplets.len()),
        ));
    }
    SparseMatrix::from_triplets(rows, cols, &triplets)
}

pub fn write_triplets<W: Write>(m: &SparseMatrix, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {} {}", m.rows(), m.cols(), m.nnz())?;
    for (r, c, v) in m.triplets() {
        writeln!(out, "{r} {c} {v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::parse_libsvm_str;

    fn dense_dataset(rows: &[[f64; 4]]) -> Dataset {
        let text: String = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let feats: Vec<String> = r
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| format!("{}:{v}", j + 1))
                    .collect();
                format!("{} {}\n", if i % 2 == 0 { 1 } else { -1 }, feats.join(" "))
            })
            .collect();
        parse_libsvm_str(&text, Some(4)).unwrap()
    }

    /// Two-pass textbook correlation on dense columns.
    fn brute_corr(rows: &[[f64; 4]], a: usize, b: usize) -> f64 {
        let n = rows.len() as f64;
        let ma = rows.iter().map(|r| r[a]).sum::<f64>() / n;
        let mb = rows.iter().map(|r| r[b]).sum::<f64>() / n;
        let cov: f64 = rows.iter().map(|r| (r[a] - ma) * (r[b] - mb)).sum();
        let va: f64 = rows.iter().map(|r| (r[a] - ma).powi(2)).sum();
        let vb: f64 = rows.iter().map(|r| (r[b] - mb).powi(2)).sum();
        if va == 0.0 || vb == 0.0 {
            0.0
        } else {
            cov / (va * vb).sqrt()
        }
    }

    const ROWS: [[f64; 4]; 6] = [
        [1.0, 2.0, 0.5, 3.0],
        [2.0, 4.1, -1.0, 3.0],
        [3.0, 5.9, 0.0, 3.0],
        [4.0, 8.2, 2.0, 3.0],
        [5.0, 9.8, -0.5, 3.0],
        [6.0, 12.1, 1.0, 3.0],
    ];

    #[test]
    fn edges_match_brute_force() {
        let ds = dense_dataset(&ROWS);
        for threshold in [0.1, 0.3, 0.5, 0.9] {
            let b = build_graph_matrix(&ds, threshold).unwrap();
            let mut expected = Vec::new();
            for i in 0..4 {
                for j in i + 1..4 {
                    if brute_corr(&ROWS, i, j).abs() > threshold {
                        expected.push((i, j));
                    }
                }
            }
            assert_eq!(b.rows(), expected.len(), "threshold {threshold}");
            for (row, (i, j)) in expected.iter().enumerate() {
                assert_eq!(b.row(row), (&[*i, *j][..], &[1.0, -1.0][..]));
            }
        }
    }

    #[test]
    fn perfectly_correlated_pair() {
        let rows = [
            [1.0, 2.0, 0.0, 0.0],
            [2.0, 4.0, 0.0, 0.0],
            [3.0, 6.0, 0.0, 0.0],
        ];
        let b = build_graph_matrix(&dense_dataset(&rows), 0.5).unwrap();
        assert_eq!(b.rows(), 1);
        assert_eq!(b.row(0), (&[0usize, 1][..], &[1.0, -1.0][..]));
    }

    #[test]
    fn constant_column_never_links() {
        let ds = dense_dataset(&ROWS);
        let b = build_graph_matrix(&ds, 0.01).unwrap();
        assert!(b.triplets().all(|(_, c, _)| c != 3));
    }

    #[test]
    fn threshold_range() {
        let ds = dense_dataset(&ROWS);
        assert!(build_graph_matrix(&ds, 0.0).is_err());
        assert!(build_graph_matrix(&ds, 1.0).is_err());
    }

    #[test]
    fn triplet_round_trip_and_errors() {
        let m = SparseMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (1, 2, -1.5)]).unwrap();
        let mut buf = Vec::new();
        write_triplets(&m, &mut buf).unwrap();
        let back = read_triplets(&buf[..]).unwrap();
        assert_eq!(
            back.triplets().collect::<Vec<_>>(),
            m.triplets().collect::<Vec<_>>()
        );
        assert!(read_triplets("2 2 1\n5 0 1\n".as_bytes()).is_err());
        assert!(read_triplets("2 2 2\n0 0 1\n".as_bytes()).is_err());
        assert!(read_triplets("".as_bytes()).is_err());
        match read_triplets("2 2 1\n0 x 1\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
