//! Nonresponse mechanisms.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Column;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    /// Uniform selection.
    Mcar,
    /// Selection probability proportional to an observed driver.
    Mar,
    /// Selection probability proportional to the target itself.
    Mnar,
}

/// Relative offset keeping the smallest driver value selectable.
pub const WEIGHT_EPSILON: f64 = 1e-6;

/// Selection weights `v - min(v) + eps * range(v)`; all ones for a constant
/// driver.
pub fn selection_weights(driver: &[f64]) -> Vec<f64> {
    let min = driver.iter().copied().fold(f64::INFINITY, f64::min);
    let max = driver.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range.is_nan() || range <= 0.0 {
        return vec![1.0; driver.len()];
    }
    driver.iter().map(|v| v - min + WEIGHT_EPSILON * range).collect()
}

/// Chooses `round(fraction * n)` of `n` rows to delete.
pub fn deletion_rows<R: Rng + ?Sized>(
    n: usize,
    mechanism: Mechanism,
    target: &[f64],
    driver: Option<&[f64]>,
    fraction: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidValue(format!("missing fraction {fraction} outside (0, 1)")));
    }
    let count = (fraction * n as f64).round() as usize;
    let weights_from = match mechanism {
        Mechanism::Mcar => None,
        Mechanism::Mar => Some(driver.ok_or_else(|| Error::Config("MAR deletion requires a driver".into()))?),
        Mechanism::Mnar => Some(target),
    };
    let mut rows: Vec<usize> = match weights_from {
        None => index::sample(rng, n, count).into_vec(),
        Some(values) => {
            if values.len() != n {
                return Err(Error::InvalidValue("driver length differs from target length".into()));
            }
            let w = selection_weights(values);
            index::sample_weighted(rng, n, |i| w[i], count)
                .map_err(|e| Error::Simulation(format!("weighted sampling failed: {e}")))?
                .into_vec()
        }
    };
    rows.sort_unstable();
    Ok(rows)
}

/// Missing mask over a fully observed `target`. MNAR uses the target as its
/// own driver; MCAR ignores `driver`.
pub fn delete_values<R: Rng + ?Sized>(
    target: &Column,
    mechanism: Mechanism,
    driver: Option<&Column>,
    fraction: f64,
    rng: &mut R,
) -> Result<Vec<bool>> {
    if target.n_observed() != target.len() {
        return Err(Error::InvalidColumn {
            column: target.name().to_string(),
            reason: "deletion target must be fully observed".into(),
        });
    }
    let driver_values = match (mechanism, driver) {
        (Mechanism::Mar, None) => return Err(Error::Config("MAR deletion requires a driver".into())),
        (Mechanism::Mar, Some(d)) => {
            if !d.kind().is_numeric() {
                return Err(Error::InvalidColumn {
                    column: d.name().to_string(),
                    reason: "driver must be numeric".into(),
                });
            }
            if d.n_observed() != d.len() {
                return Err(Error::InvalidColumn {
                    column: d.name().to_string(),
                    reason: "driver has missing values".into(),
                });
            }
            Some(d.values())
        }
        _ => None,
    };
    let rows = deletion_rows(target.len(), mechanism, target.values(), driver_values, fraction, rng)?;
    let mut mask = vec![false; target.len()];
    for r in rows {
        mask[r] = true;
    }
    Ok(mask)
}
