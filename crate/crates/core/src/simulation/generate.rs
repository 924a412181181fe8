//! Artificial data: correlated Gaussian draws, equal-width categorization and
//! outlier injection.

use nalgebra::{Cholesky, Matrix6, Vector6};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::dataset::{Column, Dataset, VariableKind};
use crate::error::{Error, Result};

pub const MVN_COLUMNS: [&str; 6] = ["Y", "X1", "X2", "X3", "X4", "X5"];
pub const MVN_MEAN: f64 = 100.0;
pub const MVN_SD: f64 = 20.0;

/// Correlations among (Y, X1, ..., X5).
pub fn correlation_matrix() -> Matrix6<f64> {
    let upper: [(usize, usize, f64); 15] = [
        (0, 1, 0.8),
        (0, 2, 0.4),
        (0, 3, 0.8),
        (0, 4, 0.4),
        (0, 5, 0.5),
        (1, 2, 0.2),
        (1, 3, 0.4),
        (1, 4, 0.2),
        (1, 5, 0.3),
        (2, 3, 0.2),
        (2, 4, 0.2),
        (2, 5, 0.3),
        (3, 4, 0.2),
        (3, 5, 0.2),
        (4, 5, 0.2),
    ];
    let mut m = Matrix6::identity();
    for (i, j, r) in upper {
        m[(i, j)] = r;
        m[(j, i)] = r;
    }
    m
}

/// Lower Cholesky factor of `sd^2 * correlation`.
pub fn covariance_factor() -> Result<Matrix6<f64>> {
    let cov = correlation_matrix() * (MVN_SD * MVN_SD);
    Cholesky::new(cov)
        .map(|c| c.l())
        .ok_or_else(|| Error::Simulation("covariance matrix is not positive definite".into()))
}

/// `n` raw draws, one `Vec` per variable in [`MVN_COLUMNS`] order.
pub fn draw_mvn<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let l = covariance_factor()?;
    let mut cols: Vec<Vec<f64>> = (0..6).map(|_| Vec::with_capacity(n)).collect();
    for _ in 0..n {
        let z = Vector6::from_fn(|_, _| StandardNormal.sample(rng));
        let x = l * z;
        for (k, col) in cols.iter_mut().enumerate() {
            col.push(MVN_MEAN + x[k]);
        }
    }
    Ok(cols)
}

/// Dataset of 6 numeric columns `Y, X1..X5`.
pub fn generate_mvn_sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Dataset> {
    let cols = draw_mvn(n, rng)?;
    let columns = cols
        .into_iter()
        .zip(MVN_COLUMNS)
        .map(|(v, name)| Column::from_parts(name, VariableKind::Numeric, v, vec![false; n]))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(columns)
}

/// Class index (0-based) of each value under `classes` equal-width classes
/// spanning `[min, max]`. Classes are left-closed; the last one is closed.
pub fn equal_width_classes(values: &[f64], classes: usize) -> Result<Vec<usize>> {
    if classes < 2 {
        return Err(Error::InvalidValue(format!("need at least 2 classes, got {classes}")));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_nan() || max <= min {
        return Err(Error::InvalidValue("cannot categorize a constant or empty column".into()));
    }
    let width = (max - min) / classes as f64;
    let breaks: Vec<f64> = (1..classes).map(|i| min + i as f64 * width).collect();
    Ok(values
        .iter()
        .map(|&v| breaks.partition_point(|&b| b <= v))
        .collect())
}

/// Nominal column with labels `c1..cK`; missing cells stay missing.
pub fn categorize_equal_width(col: &Column, classes: usize) -> Result<Column> {
    if !col.kind().is_numeric() {
        return Err(Error::InvalidColumn {
            column: col.name().to_string(),
            reason: "numeric column required".into(),
        });
    }
    let observed: Vec<f64> = col.observed().collect();
    let codes = equal_width_classes(&observed, classes).map_err(|e| Error::InvalidColumn {
        column: col.name().to_string(),
        reason: e.to_string(),
    })?;
    let mut codes = codes.into_iter();
    let values = col
        .missing_mask()
        .iter()
        .map(|&m| if m { f64::NAN } else { codes.next().expect("one code per observed cell") as f64 })
        .collect();
    let labels = (1..=classes).map(|k| format!("c{k}")).collect();
    Column::from_parts(col.name(), VariableKind::Nominal(labels), values, col.missing_mask().to_vec())
}

/// Replaces `round(rate * n)` uniformly chosen values with `N(mu, sigma^2)`
/// draws. Returns the number of replacements made.
pub fn inject_outliers_into<R: Rng + ?Sized>(
    values: &mut [f64],
    rate: f64,
    mu: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<usize> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidValue(format!("outlier rate {rate} outside [0, 1]")));
    }
    let normal = Normal::new(mu, sigma).map_err(|e| Error::InvalidValue(e.to_string()))?;
    let count = (rate * values.len() as f64).round() as usize;
    if count == 0 {
        return Ok(0);
    }
    for i in index::sample(rng, values.len(), count) {
        values[i] = normal.sample(rng);
    }
    Ok(count)
}

/// Column form of [`inject_outliers_into`]; only observed cells are
/// candidates. Returns the new column and the replacement count (0 when
/// `rate * n < 0.5`).
pub fn inject_outliers<R: Rng + ?Sized>(
    col: &Column,
    rate: f64,
    mu: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<(Column, usize)> {
    if !col.kind().is_numeric() {
        return Err(Error::InvalidColumn {
            column: col.name().to_string(),
            reason: "numeric column required".into(),
        });
    }
    let rows: Vec<usize> = (0..col.len()).filter(|&r| !col.is_missing(r)).collect();
    let mut observed: Vec<f64> = rows.iter().map(|&r| col.values()[r]).collect();
    let count = inject_outliers_into(&mut observed, rate, mu, sigma, rng)?;
    let mut values = col.values().to_vec();
    for (&r, v) in rows.iter().zip(observed) {
        values[r] = v;
    }
    let out = Column::from_parts(col.name(), VariableKind::Numeric, values, col.missing_mask().to_vec())?
        .with_missing_token(col.missing_token());
    Ok((out, count))
}
