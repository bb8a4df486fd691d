//! Image outputs: ASCII graymap (P2, maxval 65535) and a raw sidecar of
//! little-endian `u32` rows, `u32` cols, then row-major little-endian `f64`.

use std::io::{Read, Write};

pub const PGM_MAXVAL: u32 = 65535;

/// Maps `[lo, hi]` linearly onto `0..=65535`, clamping outside values.
pub fn write_pgm<W: Write>(
    mut out: W,
    rows: usize,
    cols: usize,
    data: &[f64],
    lo: f64,
    hi: f64,
) -> std::io::Result<()> {
    assert_eq!(data.len(), rows * cols, "image size mismatch");
    assert!(hi > lo, "empty intensity window");
    writeln!(out, "P2")?;
    writeln!(out, "{cols} {rows}")?;
    writeln!(out, "{PGM_MAXVAL}")?;
    for row in data.chunks(cols.max(1)) {
        let line: Vec<String> = row
            .iter()
            .map(|&v| {
                let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
                let t = if t.is_nan() { 0.0 } else { t };
                ((t * PGM_MAXVAL as f64).round() as u32).to_string()
            })
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn write_raw<W: Write>(
    mut out: W,
    rows: usize,
    cols: usize,
    data: &[f64],
) -> std::io::Result<()> {
    assert_eq!(data.len(), rows * cols, "image size mismatch");
    let dim = |v: usize| {
        u32::try_from(v)
            .map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "image too large"))
    };
    out.write_all(&dim(rows)?.to_le_bytes())?;
    out.write_all(&dim(cols)?.to_le_bytes())?;
    for v in data {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_raw<R: Read>(mut input: R) -> std::io::Result<(usize, usize, Vec<f64>)> {
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let rows = u32::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let cols = u32::from_le_bytes(word) as usize;
    let mut data = Vec::with_capacity(rows * cols);
    let mut buf = [0u8; 8];
    for _ in 0..rows * cols {
        input.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "trailing bytes after image data",
        ));
    }
    Ok((rows, cols, data))
}
