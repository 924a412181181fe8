use std::collections::HashMap;

use crate::dataset::{Dataset, VariableKind};
use crate::error::{Error, Result};
use crate::pervar::OrdinalReference;
use crate::stats::ColumnStats;

/// Which rows define the frozen column parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StatsSource {
    /// Rows of both datasets.
    #[default]
    Pooled,
    /// Rows of the first (recipient) dataset.
    First,
    /// Rows of the second (donor) dataset.
    Second,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnReference {
    Numeric(ColumnStats),
    Ordinal(OrdinalReference),
}

/// Frozen reference parameters for every numeric and ordinal column.
#[derive(Debug, Clone, Default)]
pub struct ReferenceStats {
    columns: HashMap<String, ColumnReference>,
}

impl ReferenceStats {
    /// Parameters computed from the selected rows of each part (all rows
    /// when `None`). Parts must agree on column kinds.
    pub fn from_parts(parts: &[(&Dataset, Option<&[usize]>)]) -> Result<Self> {
        let Some((first, _)) = parts.first() else {
            return Err(Error::Config("no reference data".into()));
        };
        let mut columns = HashMap::new();
        for col in first.columns() {
            let name = col.name();
            let mut observed: Vec<f64> = Vec::new();
            for (ds, rows) in parts {
                let c = ds.column(name).ok_or_else(|| {
                    Error::SchemaMismatch(format!("column {name:?} missing from reference data"))
                })?;
                if c.kind() != col.kind() {
                    return Err(Error::SchemaMismatch(format!("column {name:?} differs in kind")));
                }
                match rows {
                    None => observed.extend(c.observed()),
                    Some(rows) => observed.extend(rows.iter().filter_map(|&r| c.get(r))),
                }
            }
            let entry = match col.kind() {
                VariableKind::Numeric => {
                    // Columns never observed in the reference rows get no entry;
                    // the engine rejects them if they are used.
                    if observed.is_empty() {
                        continue;
                    }
                    ColumnReference::Numeric(ColumnStats::from_values(observed)?)
                }
                VariableKind::Ordinal(cats) => ColumnReference::Ordinal(OrdinalReference::from_codes(
                    observed.into_iter().map(|v| v as usize),
                    cats.len(),
                )),
                _ => continue,
            };
            columns.insert(name.to_string(), entry);
        }
        Ok(Self { columns })
    }

    pub fn from_dataset(data: &Dataset) -> Result<Self> {
        Self::from_parts(&[(data, None)])
    }

    pub fn for_pair(a: &Dataset, b: &Dataset, source: StatsSource) -> Result<Self> {
        match source {
            StatsSource::Pooled => Self::from_parts(&[(a, None), (b, None)]),
            StatsSource::First => Self::from_parts(&[(a, None)]),
            StatsSource::Second => Self::from_parts(&[(b, None)]),
        }
    }

    pub fn get(&self, column: &str) -> Option<&ColumnReference> {
        self.columns.get(column)
    }

    pub fn numeric(&self, column: &str) -> Option<&ColumnStats> {
        match self.columns.get(column) {
            Some(ColumnReference::Numeric(s)) => Some(s),
            _ => None,
        }
    }
}
