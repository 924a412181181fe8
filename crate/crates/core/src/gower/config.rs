use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pervar::{NumericMethod, OrdinalPolicy, Scaling};

/// Per-column overrides; columns without an entry use the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnConfig {
    pub include: bool,
    pub weight: f64,
    pub numeric: Option<NumericMethod>,
    pub ordinal: Option<OrdinalPolicy>,
}

impl Default for ColumnConfig {
    fn default() -> Self {
        Self {
            include: true,
            weight: 1.0,
            numeric: None,
            ordinal: None,
        }
    }
}

/// Settings of the two-step conditional distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ConditionalConfig {
    /// Scaling of the numeric block: range (`|a| / R`) or IQR (capped).
    pub scaling: Scaling,
    /// Move ordinal columns from the categorical block to the numeric one.
    pub ordinal_as_numeric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistanceConfig {
    /// Default method for numeric columns.
    pub numeric: NumericMethod,
    /// Default policy for ordinal columns.
    pub ordinal: OrdinalPolicy,
    pub columns: BTreeMap<String, ColumnConfig>,
    /// When set, distances follow the two-step conditional rule and
    /// weights are ignored.
    pub conditional: Option<ConditionalConfig>,
    /// k-nn windows: zero distance when either point is in the other's
    /// neighbourhood, instead of only the second in the first's.
    pub knn_symmetrize: bool,
    pub tie_seed: u64,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        Self {
            numeric: NumericMethod::Standard,
            ordinal: OrdinalPolicy::KaufmanRousseeuw,
            columns: BTreeMap::new(),
            conditional: None,
            knn_symmetrize: false,
            tie_seed: 0,
        }
    }
}

impl DistanceConfig {
    pub fn new(numeric: NumericMethod) -> Self {
        Self {
            numeric,
            ..Self::default()
        }
    }

    /// Conditional distance with the given numeric scaling.
    pub fn conditional(scaling: Scaling) -> Self {
        Self {
            conditional: Some(ConditionalConfig {
                scaling,
                ordinal_as_numeric: false,
            }),
            ..Self::default()
        }
    }

    pub fn with_ordinal(mut self, policy: OrdinalPolicy) -> Self {
        self.ordinal = policy;
        self
    }

    pub fn with_weight(mut self, column: &str, weight: f64) -> Self {
        self.columns.entry(column.to_string()).or_default().weight = weight;
        self
    }

    pub fn excluding(mut self, column: &str) -> Self {
        self.columns.entry(column.to_string()).or_default().include = false;
        self
    }

    pub fn with_tie_seed(mut self, seed: u64) -> Self {
        self.tie_seed = seed;
        self
    }

    pub fn with_knn_symmetrize(mut self, on: bool) -> Self {
        self.knn_symmetrize = on;
        self
    }

    pub fn column(&self, name: &str) -> ColumnConfig {
        self.columns.get(name).cloned().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        self.numeric.validate()?;
        for (name, c) in &self.columns {
            if !(c.weight >= 0.0 && c.weight.is_finite()) {
                return Err(Error::Config(format!(
                    "weight of column {name:?} must be finite and non-negative, got {}",
                    c.weight
                )));
            }
            if let Some(m) = &c.numeric {
                m.validate()?;
            }
        }
        Ok(())
    }
}
