//! Gower dissimilarities for mixed-type tabular data with missing values.
//!
//! The crate covers the full pipeline used in donor-based imputation:
//!
//! * [`dataset`]: typed columnar tables loaded from CSV against a JSON schema,
//!   plus ordinal and dummy transforms.
//! * [`stats`]: frozen per-column summaries (range, IQR, standard deviation,
//!   Silverman bandwidth, k-nn thresholds).
//! * [`pervar`]: per-variable distances and validity flags for every variable
//!   kind, including the IQR-capped, kernel-window and k-nn-window variants.
//! * [`gower`]: the (weighted) Gower aggregate, the two-step conditional
//!   distance, distance matrices and top-n matching.
//! * [`imputation`]: nearest-neighbour donor hotdeck.
//! * [`simulation`]: Monte Carlo harness with MCAR/MAR/MNAR deletion and the
//!   mean/quantile reproduction metrics.

pub mod dataset;
pub mod error;
pub mod gower;
pub mod imputation;
pub mod parallel;
pub mod pervar;
pub mod simulation;
pub mod stats;

pub use dataset::{Column, Dataset, SchemaSpec, VariableKind};
pub use error::{Error, Result};
pub use gower::{DistanceConfig, GowerEngine, MatchResult, ReferenceStats, StatsSource};
pub use imputation::{nn_hotdeck, HotdeckOptions, ImputationResult};
pub use pervar::{NumericMethod, OrdinalPolicy, PerVarResult, Scaling};
pub use stats::ColumnStats;
