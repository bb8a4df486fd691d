use crate::error::{check_len, invalid, Result};
use crate::linops::LinearMap;

/// Peak signal-to-noise ratio in dB with peak `max(x_ref)`; `+inf` when the
/// images coincide.
pub fn psnr(x: &[f64], x_ref: &[f64]) -> Result<f64> {
    check_len("psnr", x_ref.len(), x.len())?;
    if x.is_empty() {
        return Err(invalid("psnr of an empty image"));
    }
    let peak = x_ref.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return Err(invalid(format!(
            "psnr needs a positive reference peak, got {peak}"
        )));
    }
    let mse = x
        .iter()
        .zip(x_ref)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / x.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Fraction of samples with `sign(s^T x) = b`, counting `sign(0)` as `+1`.
pub fn accuracy(x: &[f64], samples: &dyn LinearMap, labels: &[f64]) -> Result<f64> {
    check_len("accuracy labels", samples.out_dim(), labels.len())?;
    if labels.is_empty() {
        return Err(invalid("accuracy of an empty test set"));
    }
    let scores = samples.apply(x)?;
    let hits = scores
        .iter()
        .zip(labels)
        .filter(|(s, b)| {
            let predicted = if **s >= 0.0 { 1.0 } else { -1.0 };
            predicted == **b
        })
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Least-squares line through `(log k, log value)` on a window.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub k_lo: usize,
    pub k_hi: usize,
    pub slope: f64,
    pub intercept: f64,
    /// Euclidean norm of the fit residuals in log space.
    pub residual: f64,
    pub points: usize,
}

/// Fits `log(value) = intercept + slope * log(k)` over `k_lo <= k <= k_hi`.
pub fn fit_rate(series: &[(usize, f64)], k_lo: usize, k_hi: usize) -> Result<RateFit> {
    if k_lo < 1 || k_hi <= k_lo {
        return Err(invalid(format!("invalid fit window [{k_lo}, {k_hi}]")));
    }
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(k, _)| (k_lo..=k_hi).contains(k))
        .map(|&(k, v)| {
            if v > 0.0 && v.is_finite() {
                Ok(((k as f64).ln(), v.ln()))
            } else {
                Err(invalid(format!(
                    "rate fit needs positive finite values, got {v} at k = {k}"
                )))
            }
        })
        .collect::<Result<_>>()?;
    if pts.len() < 5 {
        return Err(invalid(format!(
            "rate fit needs at least 5 points in [{k_lo}, {k_hi}], got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(invalid("rate fit needs at least two distinct iterations"));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(RateFit {
        k_lo,
        k_hi,
        slope,
        intercept,
        residual,
        points: pts.len(),
    })
}
