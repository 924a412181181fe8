//! Python bindings: datasets, distance tables, top-n matching, hotdeck
//! imputation and the simulation study.

use std::collections::HashMap;

use mixgower::dataset::load_dataset;
use mixgower::gower::{ConditionalConfig, DistanceConfig, GowerEngine, ReferenceStats, StatsSource};
use mixgower::imputation::DonorStats;
use mixgower::parallel::with_workers;
use mixgower::pervar::{NumericMethod, OrdinalPolicy, Scaling};
use mixgower::simulation::{run_study as study, Categorization, Mechanism, MethodKind, MethodSpec, SimScenario};
use mixgower::stats::{compute_stats, default_k, silverman_bandwidth, SILVERMAN_C_KDE1, SILVERMAN_C_KDE2};
use mixgower::{HotdeckOptions, SchemaSpec};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

type DonorMap = Vec<(String, String, f64)>;

/// A typed table loaded through a JSON schema.
#[pyclass(name = "Dataset", module = "mixgower", frozen)]
struct PyDataset {
    inner: mixgower::Dataset,
}

#[pymethods]
impl PyDataset {
    /// Reads `csv_path` with the schema in `schema_path`.
    #[staticmethod]
    fn from_csv(csv_path: &str, schema_path: &str) -> PyResult<Self> {
        let schema = std::fs::read_to_string(schema_path).map_err(value_err)?;
        let csv = std::fs::File::open(csv_path).map_err(value_err)?;
        Self::load(csv, &schema)
    }

    /// Parses CSV text with a schema given as JSON text.
    #[staticmethod]
    fn from_text(csv_text: &str, schema_json: &str) -> PyResult<Self> {
        Self::load(csv_text.as_bytes(), schema_json)
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    fn column_names(&self) -> Vec<String> {
        self.inner.columns().iter().map(|c| c.name().to_string()).collect()
    }

    fn row_ids(&self) -> Vec<String> {
        self.inner.row_ids().to_vec()
    }

    /// Cells of one column as rendered text, `None` where missing.
    fn column(&self, name: &str) -> PyResult<Vec<Option<String>>> {
        let col = self
            .inner
            .column(name)
            .ok_or_else(|| value_err(format!("no column {name:?}")))?;
        Ok((0..col.len()).map(|r| (!col.is_missing(r)).then(|| col.render(r))).collect())
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut out = Vec::new();
        self.inner.write_csv(&mut out).map_err(value_err)?;
        String::from_utf8(out).map_err(value_err)
    }

    /// Per-numeric-column range, quartiles, sd, bandwidths and default k.
    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let out = PyDict::new(py);
        for col in self.inner.columns().iter().filter(|c| c.kind().is_numeric()) {
            let n = col.n_observed();
            if n == 0 {
                continue;
            }
            let s = compute_stats(col).map_err(value_err)?;
            let entry = PyDict::new(py);
            entry.set_item("n", n)?;
            entry.set_item("min", s.min)?;
            entry.set_item("max", s.max)?;
            entry.set_item("R", s.range)?;
            entry.set_item("q25", s.q25)?;
            entry.set_item("q75", s.q75)?;
            entry.set_item("IQR", s.iqr)?;
            entry.set_item("sd", s.sd)?;
            if n >= 2 {
                entry.set_item("h_kde1", silverman_bandwidth(&s, n, SILVERMAN_C_KDE1).map_err(value_err)?)?;
                entry.set_item("h_kde2", silverman_bandwidth(&s, n, SILVERMAN_C_KDE2).map_err(value_err)?)?;
            }
            entry.set_item("k", default_k(n))?;
            out.set_item(col.name(), entry)?;
        }
        Ok(out)
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    fn __repr__(&self) -> String {
        format!("Dataset({} rows, columns {:?})", self.inner.n_rows(), self.column_names())
    }
}

impl PyDataset {
    fn load(csv: impl std::io::Read, schema_json: &str) -> PyResult<Self> {
        let schema = SchemaSpec::from_json(schema_json).map_err(value_err)?;
        let inner = load_dataset(csv, &schema).map_err(value_err)?;
        Ok(Self { inner })
    }
}

/// Distance settings. `method` is one of std, iqr, kde1, kde2, knn, cond;
/// `scale` (range or iqr) picks the denominator of the windowed and
/// conditional methods.
#[pyclass(name = "Config", module = "mixgower", frozen)]
struct PyConfig {
    inner: DistanceConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (method = "std", scale = None, ordinal = "kr", weights = None, knn_k = None, knn_symmetrize = false, ordinal_as_numeric = false))]
    fn new(
        method: &str,
        scale: Option<&str>,
        ordinal: &str,
        weights: Option<HashMap<String, f64>>,
        knn_k: Option<usize>,
        knn_symmetrize: bool,
        ordinal_as_numeric: bool,
    ) -> PyResult<Self> {
        let scaling = match scale {
            None | Some("range") => Scaling::Range,
            Some("iqr") => Scaling::Iqr,
            Some(other) => return Err(value_err(format!("unknown scale {other:?}"))),
        };
        let mut config = match method {
            "std" if scaling == Scaling::Iqr => DistanceConfig::new(NumericMethod::IqrCapped),
            "std" => DistanceConfig::new(NumericMethod::Standard),
            "iqr" if scale == Some("range") => return Err(value_err("method iqr cannot use the range")),
            "iqr" => DistanceConfig::new(NumericMethod::IqrCapped),
            "kde1" => DistanceConfig::new(NumericMethod::KdeWindow {
                c: SILVERMAN_C_KDE1,
                scaling,
            }),
            "kde2" => DistanceConfig::new(NumericMethod::KdeWindow {
                c: SILVERMAN_C_KDE2,
                scaling,
            }),
            "knn" => DistanceConfig::new(NumericMethod::KnnWindow { k: knn_k, scaling }),
            "cond" => {
                let mut c = DistanceConfig::conditional(scaling);
                c.conditional = Some(ConditionalConfig {
                    scaling,
                    ordinal_as_numeric,
                });
                c
            }
            other => return Err(value_err(format!("unknown method {other:?}"))),
        };
        config.ordinal = match ordinal {
            "kr" => OrdinalPolicy::KaufmanRousseeuw,
            "podani" => OrdinalPolicy::Podani,
            other => return Err(value_err(format!("unknown ordinal policy {other:?}"))),
        };
        config.knn_symmetrize = knn_symmetrize;
        for (col, w) in weights.unwrap_or_default() {
            config = config.with_weight(&col, w);
        }
        config.validate().map_err(value_err)?;
        Ok(Self { inner: config })
    }
}

fn config_or_default(config: Option<PyRef<'_, PyConfig>>) -> DistanceConfig {
    config.map(|c| c.inner.clone()).unwrap_or_default()
}

fn stats_source(name: &str) -> PyResult<StatsSource> {
    match name {
        "pooled" => Ok(StatsSource::Pooled),
        "recipients" => Ok(StatsSource::First),
        "donors" => Ok(StatsSource::Second),
        other => Err(value_err(format!("unknown stats source {other:?}"))),
    }
}

/// Recipient x donor distances, `None` where undefined.
#[pyfunction]
#[pyo3(signature = (recipients, donors, config = None, stats_from = "pooled"))]
fn distance_matrix(
    py: Python<'_>,
    recipients: &PyDataset,
    donors: &PyDataset,
    config: Option<PyRef<'_, PyConfig>>,
    stats_from: &str,
) -> PyResult<Vec<Vec<Option<f64>>>> {
    let config = config_or_default(config);
    let source = stats_source(stats_from)?;
    let (a, b) = (&recipients.inner, &donors.inner);
    py.detach(|| {
        let reference = ReferenceStats::for_pair(a, b, source)?;
        let m = GowerEngine::new(a, b, &config, &reference)?.matrix();
        Ok::<_, mixgower::Error>((0..a.n_rows()).map(|i| m.row(i).to_vec()).collect())
    })
    .map_err(value_err)
}

/// The `n` closest donors of every recipient as
/// `(recipient_id, rank, donor_id, distance)` tuples.
#[pyfunction]
#[pyo3(signature = (recipients, donors, n = 1, config = None, seed = 0, stats_from = "donors", workers = None))]
#[allow(clippy::too_many_arguments)]
fn top_n(
    py: Python<'_>,
    recipients: &PyDataset,
    donors: &PyDataset,
    n: usize,
    config: Option<PyRef<'_, PyConfig>>,
    seed: u64,
    stats_from: &str,
    workers: Option<usize>,
) -> PyResult<Vec<(String, usize, String, f64)>> {
    let config = config_or_default(config).with_tie_seed(seed);
    let source = stats_source(stats_from)?;
    let (a, b) = (&recipients.inner, &donors.inner);
    let result = py
        .detach(|| {
            with_workers(workers, || {
                let reference = ReferenceStats::for_pair(a, b, source)?;
                GowerEngine::new(a, b, &config, &reference)?.top_n(n)
            })?
        })
        .map_err(value_err)?;
    Ok(result
        .recipients
        .iter()
        .flat_map(|r| {
            r.matches.iter().enumerate().map(move |(rank, m)| {
                (a.row_id(r.recipient).to_string(), rank + 1, b.row_id(m.donor).to_string(), m.distance)
            })
        })
        .collect())
}

/// Fills the missing cells of `target` from the nearest donor. Returns the
/// completed dataset and `(recipient_id, donor_id, distance)` assignments.
#[pyfunction]
#[pyo3(signature = (data, target, config = None, seed = 0, max_uses = None, pooled_stats = false))]
fn nn_hotdeck(
    py: Python<'_>,
    data: &PyDataset,
    target: &str,
    config: Option<PyRef<'_, PyConfig>>,
    seed: u64,
    max_uses: Option<usize>,
    pooled_stats: bool,
) -> PyResult<(PyDataset, DonorMap)> {
    let config = config_or_default(config);
    let options = HotdeckOptions {
        max_uses,
        stats: if pooled_stats { DonorStats::Pooled } else { DonorStats::Donors },
    };
    let d = &data.inner;
    let result = py
        .detach(|| mixgower::nn_hotdeck(d, target, &config, seed, &options))
        .map_err(value_err)?;
    let map = result
        .assignments
        .iter()
        .map(|a| (d.row_id(a.recipient).to_string(), d.row_id(a.donor).to_string(), a.distance))
        .collect();
    Ok((PyDataset { inner: result.data }, map))
}

/// Runs the simulation study on generated data and returns the report as a
/// dict. `methods` entries look like `"kde1"` or `"knn:iqr"`; a bare name
/// runs both scalings.
#[pyfunction]
#[pyo3(signature = (scenario = "fourcat", outliers = false, mechanism = "mcar", driver = None, reps = 1000, n = 500, missing_fraction = 1.0 / 3.0, outlier_rate = 0.02, seed = 0, methods = None, workers = None))]
#[allow(clippy::too_many_arguments)]
fn run_study<'py>(
    py: Python<'py>,
    scenario: &str,
    outliers: bool,
    mechanism: &str,
    driver: Option<String>,
    reps: usize,
    n: usize,
    missing_fraction: f64,
    outlier_rate: f64,
    seed: u64,
    methods: Option<Vec<String>>,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let scenario = SimScenario {
        n,
        reps,
        categorization: match scenario {
            "fourcat" => Categorization::FourCat,
            "threecat" => Categorization::ThreeCat,
            other => return Err(value_err(format!("unknown scenario {other:?}"))),
        },
        outliers,
        outlier_rate,
        mechanism: match mechanism {
            "mcar" => Mechanism::Mcar,
            "mar" => Mechanism::Mar,
            "mnar" => Mechanism::Mnar,
            other => return Err(value_err(format!("unknown mechanism {other:?}"))),
        },
        driver,
        missing_fraction,
        seed,
        ..SimScenario::default()
    };
    scenario.validate().map_err(value_err)?;
    let specs = match methods {
        None => MethodSpec::full_grid(),
        Some(list) => parse_methods(&list)?,
    };
    let json = py
        .detach(|| with_workers(workers, || study(&scenario, &specs, false).and_then(|r| r.to_json()))?)
        .map_err(value_err)?;
    py.import("json")?.call_method1("loads", (json,))
}

fn parse_methods(list: &[String]) -> PyResult<Vec<MethodSpec>> {
    let mut out = Vec::new();
    for item in list {
        let (name, scale) = match item.split_once(':') {
            Some((n, s)) => (n, Some(s)),
            None => (item.as_str(), None),
        };
        let method = MethodKind::parse(name).ok_or_else(|| value_err(format!("unknown method {name:?}")))?;
        let scalings: &[Scaling] = match scale {
            None => &[Scaling::Range, Scaling::Iqr],
            Some("range") => &[Scaling::Range],
            Some("iqr") => &[Scaling::Iqr],
            Some(other) => return Err(value_err(format!("unknown scaling {other:?}"))),
        };
        out.extend(scalings.iter().map(|&s| MethodSpec::new(method, s)));
    }
    Ok(out)
}

#[pymodule]
#[pyo3(name = "mixgower")]
fn mixgower_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(distance_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(top_n, m)?)?;
    m.add_function(wrap_pyfunction!(nn_hotdeck, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    Ok(())
}
