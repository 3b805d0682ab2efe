//! Mixing diagnostics: batch-means effective sample size, integrated
//! autocorrelation time, and aggregation over coordinates and replications.

use crate::error::{Error, Result};
use crate::kernel::ChainTrace;

/// Batch-means effective sample size with batch length b = ⌊√N⌋:
/// ESS = N·s² / (b·s²_bm), where s² is the sample variance of the series and
/// s²_bm the sample variance of the ⌊N/b⌋ batch means over the first b·⌊N/b⌋
/// points.
pub fn ess_batch_means(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 100 {
        return Err(Error::Domain(format!("need at least 100 samples, got {n}")));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("series contains non-finite values".into()));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let s2 = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    if s2 == 0.0 {
        return Err(Error::Numeric("zero variance: constant series".into()));
    }
    let b = (n as f64).sqrt().floor() as usize;
    let k = n / b;
    let means: Vec<f64> = (0..k)
        .map(|i| series[i * b..(i + 1) * b].iter().sum::<f64>() / b as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / k as f64;
    let s2_bm = means.iter().map(|v| (v - grand) * (v - grand)).sum::<f64>() / (k - 1) as f64;
    if s2_bm == 0.0 {
        return Err(Error::Numeric("zero variance across batches".into()));
    }
    Ok(n as f64 * s2 / (b as f64 * s2_bm))
}

/// Integrated autocorrelation time: N / ESS.
pub fn iat(series: &[f64]) -> Result<f64> {
    Ok(series.len() as f64 / ess_batch_means(series)?)
}

/// Per-coordinate IATs of a stored trace and their maximum.
#[derive(Clone, Debug)]
pub struct IatReport {
    pub per_coordinate_iat: Vec<f64>,
    pub max_iat: f64,
    pub n_samples: usize,
    pub method: &'static str,
}

pub fn max_iat(trace: &ChainTrace) -> Result<IatReport> {
    if trace.is_empty() {
        return Err(Error::Domain("empty trace".into()));
    }
    let per: Vec<f64> = (0..trace.dim())
        .map(|m| iat(&trace.column(m)))
        .collect::<Result<_>>()?;
    let max = per.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    Ok(IatReport { per_coordinate_iat: per, max_iat: max, n_samples: trace.len(), method: "batch_means" })
}

/// Standard median: mean of the two middle order statistics for even length.
pub fn median_over_reps(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("median of empty set".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("median input contains NaN".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN screened above"));
    let n = v.len();
    Ok(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}
