//! Frozen per-column summaries that parameterize the numeric distances.

use serde::{Deserialize, Serialize};

use crate::dataset::Column;
use crate::error::{Error, Result};

/// Silverman constant for unimodal, skewed data ("kde1").
pub const SILVERMAN_C_KDE1: f64 = 1.06;
/// Silverman constant for skewed, moderately bimodal data ("kde2").
pub const SILVERMAN_C_KDE2: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub n_nonmissing: usize,
    pub min: f64,
    pub max: f64,
    pub range: f64,
    pub q25: f64,
    pub q75: f64,
    pub iqr: f64,
    /// Sample standard deviation (denominator `n - 1`; 0 when `n = 1`).
    pub sd: f64,
    pub bandwidth: Option<f64>,
    #[serde(skip)]
    pub sorted_values: Vec<f64>,
}

impl ColumnStats {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut sorted: Vec<f64> = values.into_iter().collect();
        if sorted.is_empty() {
            return Err(Error::EmptyColumn("<values>".into()));
        }
        if let Some(bad) = sorted.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!("non-finite value {bad}")));
        }
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let min = sorted[0];
        let max = sorted[n - 1];
        let q25 = quantile_sorted(&sorted, 0.25);
        let q75 = quantile_sorted(&sorted, 0.75);
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            n_nonmissing: n,
            min,
            max,
            range: max - min,
            q25,
            q75,
            // Interpolated quartiles are monotone, but guard against -0.0.
            iqr: (q75 - q25).max(0.0),
            sd,
            bandwidth: None,
            sorted_values: sorted,
        })
    }

    /// Stores the Silverman bandwidth for constant `c`.
    pub fn with_bandwidth(mut self, c: f64) -> Result<Self> {
        self.bandwidth = Some(silverman_bandwidth(&self, self.n_nonmissing, c)?);
        Ok(self)
    }
}

/// Summaries of the non-missing cells of a numeric column.
pub fn compute_stats(col: &Column) -> Result<ColumnStats> {
    if !col.kind().is_numeric() {
        return Err(Error::InvalidColumn {
            column: col.name().to_string(),
            reason: "numeric column required".into(),
        });
    }
    if col.n_observed() == 0 {
        return Err(Error::EmptyColumn(col.name().to_string()));
    }
    ColumnStats::from_values(col.observed())
}

/// Quantile by linear interpolation between order statistics
/// (`h = (n - 1) p`, the "type 7" rule). `sorted` must be ascending and
/// non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// `c · n^(-1/5) · min(s, IQR / 1.34)`.
///
/// When exactly one of `s` and `IQR` is zero the other one is used, so heavy
/// ties do not collapse the window.
pub fn silverman_bandwidth(stats: &ColumnStats, n: usize, c: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidValue(format!("bandwidth needs n >= 2, got {n}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidValue(format!("bandwidth constant must be positive, got {c}")));
    }
    let robust = stats.iqr / 1.34;
    let spread = match (stats.sd > 0.0, robust > 0.0) {
        (true, true) => stats.sd.min(robust),
        (true, false) => stats.sd,
        (false, true) => robust,
        (false, false) => return Ok(0.0),
    };
    Ok(c * (n as f64).powf(-0.2) * spread)
}

/// `round(sqrt(n))`, clamped to `[1, n - 1]` for `n >= 2`.
pub fn default_k(n: usize) -> usize {
    let k = (n as f64).sqrt().round() as usize;
    if n >= 2 {
        k.clamp(1, n - 1)
    } else {
        1
    }
}

/// Distance from `x` to its k-th nearest value in the column, excluding one
/// occurrence of `x` itself when present. A value `y` is one of the k
/// nearest neighbours of `x` iff `|x - y| <=` this threshold.
pub fn knn_threshold(stats: &ColumnStats, x: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidValue("k must be at least 1".into()));
    }
    knn_threshold_sorted(&stats.sorted_values, x, k).ok_or_else(|| {
        Error::InvalidValue(format!(
            "k = {k} exceeds the {} candidate neighbours",
            stats.sorted_values.len()
        ))
    })
}

/// `None` when fewer than `k` candidates remain after self-exclusion.
pub(crate) fn knn_threshold_sorted(sorted: &[f64], x: f64, k: usize) -> Option<f64> {
    let pos = sorted.partition_point(|&v| v < x);
    let mut right = pos;
    if right < sorted.len() && sorted[right] == x {
        right += 1;
    }
    let available = sorted.len() - (right - pos);
    if k > available {
        return None;
    }
    // `left` counts candidates still available below `pos`.
    let mut left = pos;
    let mut last = 0.0;
    for _ in 0..k {
        let dl = (left > 0).then(|| x - sorted[left - 1]);
        let dr = (right < sorted.len()).then(|| sorted[right] - x);
        last = match (dl, dr) {
            (Some(a), Some(b)) if a <= b => {
                left -= 1;
                a
            }
            (Some(a), None) => {
                left -= 1;
                a
            }
            (_, Some(b)) => {
                right += 1;
                b
            }
            (None, None) => unreachable!("candidate count checked above"),
        };
    }
    Some(last)
}
