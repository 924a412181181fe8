//! Diagnostic comparing distances on dummy-coded categorical data.

use serde::Serialize;

use crate::dataset::{Dataset, VariableKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DummyPair {
    pub i: usize,
    pub j: usize,
    /// Variables observed on both rows.
    pub p: usize,
    pub d_dice: f64,
    pub d_manhattan: f64,
    pub d_euclidean_sq: f64,
    pub d_simple_matching: f64,
    /// Ratios to `d_dice`; absent when `d_dice = 0`.
    pub manhattan_over_dice: Option<f64>,
    pub euclidean_sq_over_dice: Option<f64>,
    pub sm_times_p_over_dice: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DummyReport {
    pub n_rows: usize,
    pub n_variables: usize,
    /// Total number of dummy columns.
    pub n_dummies: usize,
    pub pairs: Vec<DummyPair>,
    pub manhattan_over_dice: Option<RatioSummary>,
    pub euclidean_sq_over_dice: Option<RatioSummary>,
    pub sm_times_p_over_dice: Option<RatioSummary>,
}

/// One-hot encodes every column and reports Dice, Manhattan, squared
/// Euclidean and simple-matching distances for each pair of rows, together
/// with their empirical ratios. Only variables observed on both rows of a
/// pair take part; pairs sharing no observed variable are skipped.
pub fn dummy_equivalence_report(data: &Dataset) -> Result<DummyReport> {
    let mut widths = Vec::with_capacity(data.n_cols());
    for c in data.columns() {
        let w = match c.kind() {
            VariableKind::Nominal(cats) | VariableKind::Ordinal(cats) => cats.len(),
            VariableKind::BinarySymmetric | VariableKind::BinaryAsymmetric => 2,
            VariableKind::Numeric => {
                return Err(Error::InvalidColumn {
                    column: c.name().to_string(),
                    reason: "dummy report requires categorical columns only".into(),
                })
            }
        };
        widths.push(w);
    }

    let n = data.n_rows();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let (mut p, mut mismatched) = (0usize, 0usize);
            // Dummy-level counts: both 1, and 1/0 disagreements.
            let (mut both, mut diff) = (0usize, 0usize);
            for (c, &width) in data.columns().iter().zip(&widths) {
                let (Some(x), Some(y)) = (c.code(i), c.code(j)) else {
                    continue;
                };
                p += 1;
                for k in 0..width {
                    let (u, v) = (x == k, y == k);
                    if u && v {
                        both += 1;
                    } else if u != v {
                        diff += 1;
                    }
                }
                if x != y {
                    mismatched += 1;
                }
            }
            if p == 0 {
                continue;
            }
            let d_dice = diff as f64 / (2 * both + diff) as f64;
            let d_manhattan = diff as f64;
            let d_euclidean_sq = diff as f64;
            let d_simple_matching = mismatched as f64 / p as f64;
            let ratio = |x: f64| (d_dice > 0.0).then(|| x / d_dice);
            pairs.push(DummyPair {
                i,
                j,
                p,
                d_dice,
                d_manhattan,
                d_euclidean_sq,
                d_simple_matching,
                manhattan_over_dice: ratio(d_manhattan),
                euclidean_sq_over_dice: ratio(d_euclidean_sq),
                sm_times_p_over_dice: ratio(d_simple_matching * p as f64),
            });
        }
    }

    let summary = |f: fn(&DummyPair) -> Option<f64>| -> Option<RatioSummary> {
        let vals: Vec<f64> = pairs.iter().filter_map(f).collect();
        (!vals.is_empty()).then(|| RatioSummary {
            min: vals.iter().copied().fold(f64::INFINITY, f64::min),
            max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: vals.iter().sum::<f64>() / vals.len() as f64,
        })
    };
    Ok(DummyReport {
        n_rows: n,
        n_variables: data.n_cols(),
        n_dummies: widths.iter().sum(),
        manhattan_over_dice: summary(|p| p.manhattan_over_dice),
        euclidean_sq_over_dice: summary(|p| p.euclidean_sq_over_dice),
        sm_times_p_over_dice: summary(|p| p.sm_times_p_over_dice),
        pairs,
    })
}
