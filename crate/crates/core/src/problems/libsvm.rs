use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::linops::SparseMatrix;

/// Labelled sparse samples, one row per sample, labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: SparseMatrix,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn new(samples: SparseMatrix, labels: Vec<f64>) -> Result<Self> {
        if samples.rows() != labels.len() {
            return Err(invalid(format!(
                "{} samples but {} labels",
                samples.rows(),
                labels.len()
            )));
        }
        if labels.iter().any(|&b| b != 1.0 && b != -1.0) {
            return Err(invalid("labels must be -1 or +1"));
        }
        Ok(Dataset { samples, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.samples.cols()
    }

    /// Rows `idx` in the given order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            samples: self.samples.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Maps raw labels onto `{-1, +1}`: with two distinct values the smaller
/// becomes `-1` (so `{0, 1}` and `{-1, 1}` both work); a single value maps by
/// sign, with `0` going to `-1`.
fn normalize_labels(raw: &[f64]) -> Result<Vec<f64>> {
    let mut distinct: Vec<f64> = raw.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    match distinct.as_slice() {
        [only] => Ok(vec![if *only > 0.0 { 1.0 } else { -1.0 }; raw.len()]),
        [lo, _] => Ok(raw
            .iter()
            .map(|&b| if b == *lo { -1.0 } else { 1.0 })
            .collect()),
        _ => Err(invalid(format!(
            "expected two label classes, found {} distinct labels",
            distinct.len()
        ))),
    }
}

/// Reads LIBSVM text: `label idx:val idx:val ...` with 1-based, strictly
/// ascending indices. Blank lines and lines starting with `#` are skipped;
/// CRLF is accepted. `n_features` pins the column count, otherwise it is
/// the largest index seen.
pub fn parse_libsvm<R: BufRead>(reader: R, n_features: Option<usize>) -> Result<Dataset> {
    let mut triplets = Vec::new();
    let mut raw_labels = Vec::new();
    let mut max_index = 0usize;
    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|e| parse_err(line_no, format!("read failed: {e}")))?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let mut tokens = text.split_whitespace();
        let label_token = tokens.next().unwrap_or_default();
        if label_token.contains(':') {
            return Err(parse_err(line_no, "missing label"));
        }
        let label: f64 = label_token
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad label '{label_token}'")))?;
        if !label.is_finite() {
            return Err(parse_err(
                line_no,
                format!("non-finite label '{label_token}'"),
            ));
        }
        let row = raw_labels.len();
        let mut last = 0usize;
        for token in tokens {
            let (idx, val) = token.split_once(':').ok_or_else(|| {
                parse_err(line_no, format!("expected index:value, got '{token}'"))
            })?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad index in '{token}'")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad value in '{token}'")))?;
            if idx == 0 {
                return Err(parse_err(line_no, "indices are 1-based; found 0"));
            }
            if idx <= last {
                return Err(parse_err(
                    line_no,
                    format!("index {idx} does not follow {last} in ascending order"),
                ));
            }
            if !val.is_finite() {
                return Err(parse_err(line_no, format!("non-finite value in '{token}'")));
            }
            if let Some(d) = n_features {
                if idx > d {
                    return Err(parse_err(
                        line_no,
                        format!("index {idx} exceeds feature count {d}"),
                    ));
                }
            }
            last = idx;
            max_index = max_index.max(idx);
            triplets.push((row, idx - 1, val));
        }
        raw_labels.push(label);
    }
    if raw_labels.is_empty() {
        return Err(parse_err(0, "no samples in input"));
    }
    let cols = n_features.unwrap_or(max_index);
    let samples = SparseMatrix::from_triplets(raw_labels.len(), cols, &triplets)?;
    Dataset::new(samples, normalize_labels(&raw_labels)?)
}

pub fn parse_libsvm_str(text: &str, n_features: Option<usize>) -> Result<Dataset> {
    parse_libsvm(text.as_bytes(), n_features)
}

/// Writes labels as `+1`/`-1` and values in shortest round-trip form.
pub fn write_libsvm<W: Write>(ds: &Dataset, mut out: W) -> std::io::Result<()> {
    for (i, label) in ds.labels.iter().enumerate() {
        write!(out, "{}", if *label > 0.0 { "+1" } else { "-1" })?;
        let (cols, vals) = ds.samples.row(i);
        for (c, v) in cols.iter().zip(vals) {
            write!(out, " {}:{}", c + 1, v)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Shuffles rows with a seeded generator and splits off
/// `round(fraction * N)` training rows.
pub fn split_train_test(
    ds: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(invalid(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = ds.len();
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(invalid(format!(
            "fraction {train_fraction} of {n} samples leaves one side empty"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train, test) = idx.split_at(n_train);
    Ok((ds.subset(train), ds.subset(test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_basic_line() {
        let ds = parse_libsvm_str("+1 1:0.5 3:2\n-1 2:1\n", None).unwrap();
        assert_eq!(ds.labels, vec![1.0, -1.0]);
        assert_eq!(ds.n_features(), 3);
        assert_eq!(ds.samples.row(0), (&[0usize, 2][..], &[0.5, 2.0][..]));
        assert_eq!(ds.samples.row(1), (&[1usize][..], &[1.0][..]));
    }

    #[test]
    fn zero_one_labels_are_mapped() {
        let ds = parse_libsvm_str("0 2:1\n1 1:1\n", None).unwrap();
        assert_eq!(ds.labels, vec![-1.0, 1.0]);
        let single = parse_libsvm_str("0 2:1\n", None).unwrap();
        assert_eq!(single.labels, vec![-1.0]);
    }

    #[test]
    fn comments_blank_lines_and_crlf() {
        let ds = parse_libsvm_str("# header\r\n\r\n+1 1:1\r\n-1 2:3.5\r\n", None).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.samples.row(1).1, &[3.5]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("+1 1:1\n+1 3:1 2:1\n", 2),
            ("+1 1:x\n", 1),
            ("# c\n+1 0:1\n", 2),
            ("+1 1:1\nabc 1:1\n", 2),
            ("+1 1:1\n+1 2\n", 2),
            ("+1 1:1 1:2\n", 1),
        ];
        for (text, line) in cases {
            match parse_libsvm_str(text, None) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(parse_libsvm_str("", None).is_err());
        assert!(parse_libsvm_str("# only\n", None).is_err());
        assert!(parse_libsvm_str("+1 5:1\n", Some(4)).is_err());
        assert!(parse_libsvm_str("1 1:1\n2 1:1\n3 1:1\n", None).is_err());
    }

    #[test]
    fn pinned_feature_count() {
        let ds = parse_libsvm_str("+1 1:1\n-1 1:1\n", Some(5)).unwrap();
        assert_eq!(ds.n_features(), 5);
    }

    #[test]
    fn round_trip() {
        let text = "+1 1:0.1 4:-2.5e-7\n-1 2:3\n+1\n";
        let ds = parse_libsvm_str(text, None).unwrap();
        let mut buf = Vec::new();
        write_libsvm(&ds, &mut buf).unwrap();
        let again = parse_libsvm(&buf[..], Some(ds.n_features())).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let text: String = (0..10)
            .map(|i| format!("{} 1:{i}\n", if i % 2 == 0 { 1 } else { -1 }))
            .collect();
        let ds = parse_libsvm_str(&text, None).unwrap();
        let (a, b) = split_train_test(&ds, 0.8, 7).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        let (a2, b2) = split_train_test(&ds, 0.8, 7).unwrap();
        assert_eq!((a, b), (a2, b2));
        assert!(split_train_test(&ds, 0.01, 0).is_err());
        assert!(split_train_test(&ds, 1.0, 0).is_err());
    }
}
