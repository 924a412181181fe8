//! Per-variable distances `d` and validity flags `delta`.
//!
//! Every function returns `d` in `[0, 1]`. When `delta` is false the
//! variable does not enter the aggregate and `d` is reported as 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::ColumnStats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerVarResult {
    pub d: f64,
    pub delta: bool,
}

impl PerVarResult {
    pub const EXCLUDED: PerVarResult = PerVarResult { d: 0.0, delta: false };

    pub fn valid(d: f64) -> Self {
        Self { d, delta: true }
    }
}

/// Denominator `g` of the windowed numeric distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    #[default]
    Range,
    Iqr,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum NumericMethod {
    /// `|a| / R`.
    #[default]
    Standard,
    /// `|a| / IQR` below the IQR, 1 from there on.
    IqrCapped,
    /// Zero inside the Silverman window of constant `c`.
    KdeWindow { c: f64, scaling: Scaling },
    /// Zero for the `k` nearest neighbours of the first point; `None`
    /// uses round(sqrt(n)) of the reference column.
    KnnWindow { k: Option<usize>, scaling: Scaling },
}

impl NumericMethod {
    pub fn scaling(&self) -> Scaling {
        match self {
            NumericMethod::Standard => Scaling::Range,
            NumericMethod::IqrCapped => Scaling::Iqr,
            NumericMethod::KdeWindow { scaling, .. } | NumericMethod::KnnWindow { scaling, .. } => {
                *scaling
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NumericMethod::KdeWindow { c, .. } if !(*c > 0.0 && c.is_finite()) => Err(
                Error::Config(format!("kernel window constant must be positive, got {c}")),
            ),
            NumericMethod::KnnWindow { k: Some(0), .. } => {
                Err(Error::Config("k-nn window needs k >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Whether `d(i, j) = d(j, i)` holds for every pair.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, NumericMethod::KnnWindow { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OrdinalPolicy {
    /// Positions rescaled to `[0, 1]`, then treated as ratio scale.
    #[default]
    KaufmanRousseeuw,
    /// Midranks scaled by the observed rank span.
    Podani,
}

/// Frozen numeric parameters of one column.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NumericScale {
    pub range: f64,
    pub iqr: f64,
    /// Window half-width `h` (0 when no kernel window is used).
    pub bandwidth: f64,
}

impl NumericScale {
    pub fn from_stats(stats: &ColumnStats) -> Self {
        Self {
            range: stats.range,
            iqr: stats.iqr,
            bandwidth: stats.bandwidth.unwrap_or(0.0),
        }
    }

    fn g(&self, scaling: Scaling) -> f64 {
        match scaling {
            Scaling::Range => self.range,
            Scaling::Iqr => self.iqr,
        }
    }
}

/// k-nn thresholds attached to a pair: the neighbourhood radius of the
/// first point and, when symmetrized, of the second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnBounds {
    pub from_i: f64,
    pub from_j: Option<f64>,
}

/// Reference data for ordinal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinalReference {
    pub n_categories: usize,
    /// Midrank of each category in the reference data.
    pub midranks: Vec<f64>,
    /// `max r - min r` over the observed reference midranks.
    pub rank_span: f64,
}

impl OrdinalReference {
    pub fn from_codes(codes: impl Iterator<Item = usize>, n_categories: usize) -> Self {
        let (midranks, counts) = crate::dataset::category_midranks(codes, n_categories);
        let observed: Vec<f64> = midranks
            .iter()
            .zip(&counts)
            .filter(|(_, &c)| c > 0)
            .map(|(&r, _)| r)
            .collect();
        let rank_span = match (observed.first(), observed.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        };
        Self {
            n_categories,
            midranks,
            rank_span,
        }
    }
}

fn binary_cell(x: Option<f64>) -> Result<Option<bool>> {
    match x {
        None => Ok(None),
        Some(0.0) => Ok(Some(false)),
        Some(1.0) => Ok(Some(true)),
        Some(v) => Err(Error::InvalidValue(format!("non-binary value {v}"))),
    }
}

/// Simple matching.
pub fn dist_binary_symmetric(xi: Option<f64>, xj: Option<f64>) -> Result<PerVarResult> {
    Ok(match (binary_cell(xi)?, binary_cell(xj)?) {
        (Some(a), Some(b)) => PerVarResult::valid(if a == b { 0.0 } else { 1.0 }),
        _ => PerVarResult::EXCLUDED,
    })
}

/// Jaccard: double zeros are excluded from the comparison.
pub fn dist_binary_asymmetric(xi: Option<f64>, xj: Option<f64>) -> Result<PerVarResult> {
    Ok(match (binary_cell(xi)?, binary_cell(xj)?) {
        (Some(false), Some(false)) => PerVarResult::EXCLUDED,
        (Some(a), Some(b)) => PerVarResult::valid(if a && b { 0.0 } else { 1.0 }),
        _ => PerVarResult::EXCLUDED,
    })
}

/// Simple matching on category codes.
pub fn dist_nominal(xi: Option<usize>, xj: Option<usize>, n_categories: usize) -> Result<PerVarResult> {
    for c in [xi, xj].into_iter().flatten() {
        if c >= n_categories {
            return Err(Error::InvalidValue(format!("undeclared category code {c}")));
        }
    }
    Ok(match (xi, xj) {
        (Some(a), Some(b)) => PerVarResult::valid(if a == b { 0.0 } else { 1.0 }),
        _ => PerVarResult::EXCLUDED,
    })
}

pub fn dist_ordinal(
    xi: Option<usize>,
    xj: Option<usize>,
    policy: OrdinalPolicy,
    reference: &OrdinalReference,
) -> Result<PerVarResult> {
    for c in [xi, xj].into_iter().flatten() {
        if c >= reference.n_categories {
            return Err(Error::InvalidValue(format!("undeclared category code {c}")));
        }
    }
    let (Some(a), Some(b)) = (xi, xj) else {
        return Ok(PerVarResult::EXCLUDED);
    };
    Ok(ordinal_kernel(a, b, policy, reference))
}

#[inline]
pub(crate) fn ordinal_kernel(a: usize, b: usize, policy: OrdinalPolicy, reference: &OrdinalReference) -> PerVarResult {
    match policy {
        OrdinalPolicy::KaufmanRousseeuw => {
            let denom = (reference.n_categories - 1) as f64;
            PerVarResult::valid((a as f64 - b as f64).abs() / denom)
        }
        OrdinalPolicy::Podani => {
            if reference.rank_span <= 0.0 {
                return PerVarResult::EXCLUDED;
            }
            let diff = (reference.midranks[a] - reference.midranks[b]).abs();
            PerVarResult::valid((diff / reference.rank_span).min(1.0))
        }
    }
}

/// Numeric distance under `method`, with `a = |x_i - x_j|`.
///
/// Denominators of zero give 0 for `a = 0` and 1 otherwise. Values of
/// `a / g` above 1 (points outside the reference range) are capped at 1.
pub fn dist_numeric(
    xi: Option<f64>,
    xj: Option<f64>,
    method: &NumericMethod,
    scale: &NumericScale,
    knn: Option<KnnBounds>,
) -> Result<PerVarResult> {
    for v in [xi, xj].into_iter().flatten() {
        if !v.is_finite() {
            return Err(Error::InvalidValue(format!("non-finite value {v}")));
        }
    }
    let (Some(a), Some(b)) = (xi, xj) else {
        return Ok(PerVarResult::EXCLUDED);
    };
    if matches!(method, NumericMethod::KnnWindow { .. }) && knn.is_none() {
        return Err(Error::Config("k-nn window requires neighbourhood thresholds".into()));
    }
    Ok(PerVarResult::valid(numeric_kernel((a - b).abs(), method, scale, knn)))
}

#[inline]
fn scaled(a: f64, g: f64) -> f64 {
    if g > 0.0 {
        (a / g).min(1.0)
    } else if a == 0.0 {
        0.0
    } else {
        1.0
    }
}

/// Hot path shared with the aggregate engine; `a >= 0`.
#[inline]
pub(crate) fn numeric_kernel(a: f64, method: &NumericMethod, scale: &NumericScale, knn: Option<KnnBounds>) -> f64 {
    match *method {
        NumericMethod::Standard => scaled(a, scale.range),
        NumericMethod::IqrCapped => {
            if scale.iqr > 0.0 && a < scale.iqr {
                a / scale.iqr
            } else {
                scaled(a, 0.0)
            }
        }
        NumericMethod::KdeWindow { scaling, .. } => {
            // The three cases partition [0, inf): a <= h, h < a < g, a >= g.
            if a <= scale.bandwidth {
                0.0
            } else {
                scaled(a, scale.g(scaling))
            }
        }
        NumericMethod::KnnWindow { scaling, .. } => {
            let bounds = knn.expect("k-nn thresholds");
            let inside = a <= bounds.from_i || bounds.from_j.is_some_and(|t| a <= t);
            if inside {
                0.0
            } else {
                scaled(a, scale.g(scaling))
            }
        }
    }
}
