//! Evaluation metrics of imputed targets.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

/// Quantile levels `0, 0.025, ..., 1`.
pub const QUANTILE_LEVELS: usize = 41;

pub fn quantile_levels() -> Vec<f64> {
    (0..QUANTILE_LEVELS).map(|k| k as f64 / (QUANTILE_LEVELS - 1) as f64).collect()
}

/// Empirical quantiles at every level (interpolated order statistics).
pub fn empirical_quantiles(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_levels().into_iter().map(|p| quantile_sorted(&sorted, p)).collect()
}

/// Gaussian reference quantiles; the infinite endpoints are replaced with the
/// minimum and maximum of `complete`.
pub fn gaussian_reference_quantiles(mean: f64, sd: f64, complete: &[f64]) -> Result<Vec<f64>> {
    let normal = Normal::new(mean, sd).map_err(|e| Error::InvalidValue(e.to_string()))?;
    let min = complete.iter().copied().fold(f64::INFINITY, f64::min);
    let max = complete.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if complete.is_empty() {
        return Err(Error::InvalidValue("empty complete sample".into()));
    }
    let last = QUANTILE_LEVELS - 1;
    Ok(quantile_levels()
        .into_iter()
        .enumerate()
        .map(|(k, p)| match k {
            0 => min,
            k if k == last => max,
            _ => normal.inverse_cdf(p),
        })
        .collect())
}

/// Pearson correlation; `None` when either side has zero variance or fewer
/// than two points.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Per-replication quantile deviations: mean signed difference and root mean
/// squared difference between estimated and reference quantiles.
pub fn quantile_deviation(estimated: &[f64], reference: &[f64]) -> Result<(f64, f64)> {
    if estimated.len() != reference.len() || estimated.is_empty() {
        return Err(Error::InvalidValue("quantile vectors differ in length".into()));
    }
    let k = estimated.len() as f64;
    let (mut sum, mut sq) = (0.0, 0.0);
    for (q, r) in estimated.iter().zip(reference) {
        sum += q - r;
        sq += (q - r).powi(2);
    }
    Ok((sum / k, (sq / k).sqrt()))
}

/// `(sB, sRMSE)` from the completed-target mean of every replication.
pub fn metric_mean_reproduction(rep_means: &[f64], mu: f64) -> Result<(f64, f64)> {
    if rep_means.is_empty() {
        return Err(Error::Simulation("no replications".into()));
    }
    let h = rep_means.len() as f64;
    let bias = rep_means.iter().map(|m| m - mu).sum::<f64>() / h;
    let mse = rep_means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / h;
    Ok((bias, mse.sqrt()))
}

/// `(sDQ, sRSDQ)` over replications. `completed[h]` holds the completed
/// target of replication `h`, `reference[h]` its reference quantiles.
pub fn metric_quantile_reproduction(completed: &[Vec<f64>], reference: &[Vec<f64>]) -> Result<(f64, f64)> {
    if completed.is_empty() {
        return Err(Error::Simulation("no replications".into()));
    }
    if completed.len() != reference.len() {
        return Err(Error::InvalidValue("one reference quantile vector per replication required".into()));
    }
    let per_rep = completed
        .iter()
        .zip(reference)
        .map(|(c, r)| quantile_deviation(&empirical_quantiles(c), r))
        .collect::<Result<Vec<_>>>()?;
    Ok(average_quantile_deviations(&per_rep))
}

pub(crate) fn average_quantile_deviations(per_rep: &[(f64, f64)]) -> (f64, f64) {
    let h = per_rep.len() as f64;
    (
        per_rep.iter().map(|d| d.0).sum::<f64>() / h,
        per_rep.iter().map(|d| d.1).sum::<f64>() / h,
    )
}
