//! Monte Carlo harness for comparing distances in nearest-neighbour hotdeck
//! imputation.
//!
//! Each replication generates (or takes) complete data, deletes part of the
//! target, imputes it with every configured method on the same masked data,
//! and records the closeness of imputed to deleted values together with the
//! mean and quantile reproduction metrics.

mod generate;
pub mod metrics;
mod missing;
mod study;

use serde::{Deserialize, Serialize};

use crate::gower::DistanceConfig;
use crate::pervar::{NumericMethod, Scaling};
use crate::stats::{SILVERMAN_C_KDE1, SILVERMAN_C_KDE2};

pub use generate::{
    categorize_equal_width, correlation_matrix, covariance_factor, draw_mvn, equal_width_classes,
    generate_mvn_sample, inject_outliers, inject_outliers_into, MVN_COLUMNS, MVN_MEAN, MVN_SD,
};
pub use metrics::{metric_mean_reproduction, metric_quantile_reproduction, pearson};
pub use missing::{delete_values, deletion_rows, selection_weights, Mechanism, WEIGHT_EPSILON};
pub use study::{run_study, run_study_on_data};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Categorization {
    /// X2..X5 cut into 4, 6, 2 and 4 equal-width classes; X1 stays numeric.
    FourCat,
    /// X3..X5 cut into 6, 2 and 4 classes; X1 and X2 stay numeric.
    ThreeCat,
}

impl Categorization {
    /// `(column, classes)` pairs.
    pub fn classes(&self) -> &'static [(&'static str, usize)] {
        match self {
            Categorization::FourCat => &[("X2", 4), ("X3", 6), ("X4", 2), ("X5", 4)],
            Categorization::ThreeCat => &[("X3", 6), ("X4", 2), ("X5", 4)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub n: usize,
    pub reps: usize,
    pub categorization: Categorization,
    pub outliers: bool,
    pub outlier_rate: f64,
    pub outlier_mean: f64,
    pub outlier_sd: f64,
    pub missing_fraction: f64,
    pub mechanism: Mechanism,
    /// Driver column for MAR deletion (defaults to `X1` on artificial data).
    pub driver: Option<String>,
    pub seed: u64,
}

impl Default for SimScenario {
    fn default() -> Self {
        Self {
            n: 500,
            reps: 1000,
            categorization: Categorization::FourCat,
            outliers: false,
            outlier_rate: 0.02,
            outlier_mean: 2.0 * MVN_MEAN,
            outlier_sd: MVN_SD,
            missing_fraction: 1.0 / 3.0,
            mechanism: Mechanism::Mcar,
            driver: None,
            seed: 0,
        }
    }
}

impl SimScenario {
    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.outlier_rate) {
            return Err(Error::Config("outlier rate must lie in [0, 1]".into()));
        }
        if !(self.missing_fraction > 0.0 && self.missing_fraction < 1.0) {
            return Err(Error::Config("missing fraction must lie in (0, 1)".into()));
        }
        if self.n < 4 {
            return Err(Error::Config("n must be at least 4".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MethodKind {
    #[serde(rename = "no.mod")]
    NoMod,
    #[serde(rename = "kde1")]
    Kde1,
    #[serde(rename = "kde2")]
    Kde2,
    #[serde(rename = "knn")]
    Knn,
    #[serde(rename = "cond.dist")]
    CondDist,
}

impl MethodKind {
    pub const ALL: [MethodKind; 5] = [
        MethodKind::NoMod,
        MethodKind::Kde1,
        MethodKind::Kde2,
        MethodKind::Knn,
        MethodKind::CondDist,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            MethodKind::NoMod => "no.mod",
            MethodKind::Kde1 => "kde1",
            MethodKind::Kde2 => "kde2",
            MethodKind::Knn => "knn",
            MethodKind::CondDist => "cond.dist",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "no.mod" | "std" | "nomod" => MethodKind::NoMod,
            "kde1" => MethodKind::Kde1,
            "kde2" => MethodKind::Kde2,
            "knn" => MethodKind::Knn,
            "cond.dist" | "cond" => MethodKind::CondDist,
            _ => return None,
        })
    }
}

/// One compared distance: a method and the scaling of its numeric part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: MethodKind,
    pub scaling: Scaling,
}

impl MethodSpec {
    pub fn new(method: MethodKind, scaling: Scaling) -> Self {
        Self { method, scaling }
    }

    /// Every method under both scalings, range first.
    pub fn full_grid() -> Vec<MethodSpec> {
        [Scaling::Range, Scaling::Iqr]
            .into_iter()
            .flat_map(|s| MethodKind::ALL.into_iter().map(move |m| MethodSpec::new(m, s)))
            .collect()
    }

    pub fn distance_config(&self) -> DistanceConfig {
        let s = self.scaling;
        match self.method {
            MethodKind::NoMod => DistanceConfig::new(match s {
                Scaling::Range => NumericMethod::Standard,
                Scaling::Iqr => NumericMethod::IqrCapped,
            }),
            MethodKind::Kde1 => DistanceConfig::new(NumericMethod::KdeWindow { c: SILVERMAN_C_KDE1, scaling: s }),
            MethodKind::Kde2 => DistanceConfig::new(NumericMethod::KdeWindow { c: SILVERMAN_C_KDE2, scaling: s }),
            MethodKind::Knn => DistanceConfig::new(NumericMethod::KnnWindow { k: None, scaling: s }),
            MethodKind::CondDist => DistanceConfig::conditional(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: MethodKind,
    pub scaling: Scaling,
    /// Mean over replications of the correlation between imputed and
    /// deleted values.
    pub rho: Option<f64>,
    #[serde(rename = "sB")]
    pub s_b: Option<f64>,
    #[serde(rename = "sRMSE")]
    pub s_rmse: Option<f64>,
    #[serde(rename = "sDQ")]
    pub s_dq: Option<f64>,
    #[serde(rename = "sRSDQ")]
    pub s_rsdq: Option<f64>,
    /// Replications contributing to the metrics.
    pub reps: usize,
    /// Replications where the correlation was defined.
    pub rho_reps: usize,
}

/// Per-replication, per-method values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepTrace {
    pub rep: usize,
    pub method: MethodKind,
    pub scaling: Scaling,
    pub rho: Option<f64>,
    pub mean: f64,
    pub dq: f64,
    pub rsdq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scenario: SimScenario,
    /// Name of the user dataset target, when not run on artificial data.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub mu: f64,
    pub methods: Vec<MethodSummary>,
    pub reps_requested: usize,
    pub reps_completed: usize,
    pub partial: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub failures: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub traces: Vec<RepTrace>,
}

impl SimReport {
    pub fn method(&self, method: MethodKind, scaling: Scaling) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method && m.scaling == scaling)
    }

    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
