use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use mixgower::dataset::load_dataset;
use mixgower::gower::{dummy_equivalence_report, ConditionalConfig, GowerEngine, ReferenceStats};
use mixgower::imputation::{nn_hotdeck, DonorStats, HotdeckOptions};
use mixgower::simulation::{
    run_study, run_study_on_data, Categorization, Mechanism, MethodKind, MethodSpec, SimScenario,
};
use mixgower::stats::{compute_stats, default_k, silverman_bandwidth, SILVERMAN_C_KDE1, SILVERMAN_C_KDE2};
use mixgower::{Dataset, DistanceConfig, NumericMethod, OrdinalPolicy, Scaling, SchemaSpec, StatsSource};
use serde::Serialize;

use crate::args::*;

/// Failure classes mapped to exit statuses.
#[derive(Debug)]
pub enum CliError {
    /// Invalid invocation: exit status 1.
    Usage(String),
    /// Valid invocation, unusable data: exit status 2.
    Data(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

impl From<mixgower::Error> for CliError {
    fn from(e: mixgower::Error) -> Self {
        CliError::Data(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult<()> {
    let workers = cli.workers;
    if workers == Some(0) {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let job = move || match cli.command {
        Command::Stats(a) => stats(a),
        Command::Dist(a) => dist(a),
        Command::Match(a) => matches(a),
        Command::Impute(a) => impute(a),
        Command::Simulate(a) => simulate(a),
        Command::DummyReport(a) => dummy_report(a),
    };
    mixgower::parallel::with_workers(workers, job)?
}

fn require_file(path: &Path, flag: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{flag}: no such file {}", path.display())))
    }
}

fn read_schema(path: &Path) -> CliResult<SchemaSpec> {
    require_file(path, "--schema")?;
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(SchemaSpec::from_reader(BufReader::new(file)).with_context(|| format!("reading schema {}", path.display()))?)
}

fn read_data(path: &Path, flag: &str, schema: &SchemaSpec) -> CliResult<Dataset> {
    require_file(path, flag)?;
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(load_dataset(BufReader::new(file), schema).with_context(|| format!("loading {}", path.display()))?)
}

/// Runs `f` against the `--out` file, or standard output when absent.
fn with_output<F>(out: Option<&PathBuf>, f: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> anyhow::Result<()>,
{
    match out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush().with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush().context("writing standard output")?;
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(out: Option<&PathBuf>, value: &T) -> CliResult<()> {
    with_output(out, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

#[derive(Serialize)]
struct StatsEntry {
    kind: mixgower::dataset::KindTag,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    categories: Option<Vec<String>>,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    numeric: Option<NumericEntry>,
}

#[derive(Serialize)]
struct NumericEntry {
    min: f64,
    max: f64,
    #[serde(rename = "R")]
    range: f64,
    q25: f64,
    q75: f64,
    #[serde(rename = "IQR")]
    iqr: f64,
    sd: f64,
    h_kde1: Option<f64>,
    h_kde2: Option<f64>,
    k: usize,
}

fn stats(a: StatsArgs) -> CliResult<()> {
    let schema = read_schema(&a.schema)?;
    let data = read_data(&a.data, "--data", &schema)?;
    let mut report = Vec::with_capacity(data.n_cols());
    for col in data.columns() {
        let n = col.n_observed();
        let numeric = if col.kind().is_numeric() && n > 0 {
            let s = compute_stats(col)?;
            let h = |c| (n >= 2).then(|| silverman_bandwidth(&s, n, c)).transpose();
            Some(NumericEntry {
                min: s.min,
                max: s.max,
                range: s.range,
                q25: s.q25,
                q75: s.q75,
                iqr: s.iqr,
                sd: s.sd,
                h_kde1: h(SILVERMAN_C_KDE1)?,
                h_kde2: h(SILVERMAN_C_KDE2)?,
                k: default_k(n),
            })
        } else {
            None
        };
        report.push((
            col.name().to_string(),
            StatsEntry {
                kind: col.kind().tag(),
                n,
                categories: col.kind().categories().map(<[String]>::to_vec),
                numeric,
            },
        ));
    }
    write_json(a.out.as_ref(), &OrderedMap(report))
}

/// Serializes as a JSON object keeping insertion order.
struct OrderedMap<T>(Vec<(String, T)>);

impl<T: Serialize> Serialize for OrderedMap<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

fn distance_config(a: &DistanceArgs) -> CliResult<DistanceConfig> {
    let scaling = |s: Option<ScaleArg>| match s {
        Some(ScaleArg::Iqr) => Scaling::Iqr,
        _ => Scaling::Range,
    };
    if a.knn_k.is_some() && a.method != MethodArg::Knn {
        return Err(CliError::Usage("--knn-k applies to --method knn only".into()));
    }
    if a.ordinal_as_numeric && a.method != MethodArg::Cond {
        return Err(CliError::Usage("--ordinal-as-numeric applies to --method cond only".into()));
    }
    let mut config = match a.method {
        MethodArg::Std => match a.scale {
            Some(ScaleArg::Iqr) if !a.force => {
                return Err(CliError::Usage(
                    "--method std uses the range; pass --force to switch to the IQR-capped distance, or use --method iqr"
                        .into(),
                ))
            }
            Some(ScaleArg::Iqr) => DistanceConfig::new(NumericMethod::IqrCapped),
            _ => DistanceConfig::new(NumericMethod::Standard),
        },
        MethodArg::Iqr => {
            if a.scale == Some(ScaleArg::Range) {
                return Err(CliError::Usage("--method iqr cannot be combined with --scale range".into()));
            }
            DistanceConfig::new(NumericMethod::IqrCapped)
        }
        MethodArg::Kde1 => DistanceConfig::new(NumericMethod::KdeWindow {
            c: SILVERMAN_C_KDE1,
            scaling: scaling(a.scale),
        }),
        MethodArg::Kde2 => DistanceConfig::new(NumericMethod::KdeWindow {
            c: SILVERMAN_C_KDE2,
            scaling: scaling(a.scale),
        }),
        MethodArg::Knn => {
            if a.knn_k == Some(0) {
                return Err(CliError::Usage("--knn-k must be at least 1".into()));
            }
            DistanceConfig::new(NumericMethod::KnnWindow {
                k: a.knn_k,
                scaling: scaling(a.scale),
            })
        }
        MethodArg::Cond => {
            let mut c = DistanceConfig::conditional(scaling(a.scale));
            c.conditional = Some(ConditionalConfig {
                scaling: scaling(a.scale),
                ordinal_as_numeric: a.ordinal_as_numeric,
            });
            c
        }
    };
    config.ordinal = match a.ordinal {
        OrdinalArg::Kr => OrdinalPolicy::KaufmanRousseeuw,
        OrdinalArg::Podani => OrdinalPolicy::Podani,
    };
    config.knn_symmetrize = a.knn_symmetrize;
    if let Some(path) = &a.weights {
        require_file(path, "--weights")?;
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let weights: BTreeMap<String, f64> = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("--weights {}: expected an object of numbers: {e}", path.display())))?;
        for (col, w) in weights {
            config = config.with_weight(&col, w);
        }
    }
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

fn check_weight_columns(config: &DistanceConfig, data: &Dataset) -> CliResult<()> {
    for name in config.columns.keys() {
        if data.column(name).is_none() {
            return Err(CliError::Usage(format!("--weights names unknown column {name:?}")));
        }
    }
    Ok(())
}

struct Loaded {
    recipients: Dataset,
    donors: Dataset,
    reference: ReferenceStats,
    config: DistanceConfig,
}

fn load_pair(a: &DistArgs) -> CliResult<Loaded> {
    let config = distance_config(&a.distance)?;
    let schema = read_schema(&a.schema)?;
    let recipients = read_data(&a.recipients, "--recipients", &schema)?;
    let donors = read_data(&a.donors, "--donors", &schema)?;
    check_weight_columns(&config, &recipients)?;
    let source = match a.stats_from {
        StatsSourceArg::Pooled => StatsSource::Pooled,
        StatsSourceArg::Recipients => StatsSource::First,
        StatsSourceArg::Donors => StatsSource::Second,
    };
    let reference = ReferenceStats::for_pair(&recipients, &donors, source)?;
    Ok(Loaded {
        recipients,
        donors,
        reference,
        config,
    })
}

fn dist(a: DistArgs) -> CliResult<()> {
    let l = load_pair(&a)?;
    let engine = GowerEngine::new(&l.recipients, &l.donors, &l.config, &l.reference)?;
    let matrix = engine.matrix();
    with_output(a.out.as_ref(), |w| {
        matrix.write_csv(w, l.recipients.row_ids(), l.donors.row_ids())?;
        Ok(())
    })
}

fn matches(a: MatchArgs) -> CliResult<()> {
    if a.top_n == 0 {
        return Err(CliError::Usage("--top-n must be at least 1".into()));
    }
    let mut l = load_pair(&a.dist)?;
    l.config.tie_seed = a.seed;
    let engine = GowerEngine::new(&l.recipients, &l.donors, &l.config, &l.reference)?;
    let result = engine.top_n(a.top_n)?;
    with_output(a.dist.out.as_ref(), |w| {
        result.write_csv(w, &l.recipients, &l.donors)?;
        Ok(())
    })
}

fn impute(a: ImputeArgs) -> CliResult<()> {
    let config = distance_config(&a.distance)?;
    let schema = read_schema(&a.schema)?;
    let data = read_data(&a.data, "--data", &schema)?;
    check_weight_columns(&config, &data)?;
    if data.column(&a.target).is_none() {
        return Err(CliError::Usage(format!("--target: no column {:?}", a.target)));
    }
    if a.max_uses == Some(0) {
        return Err(CliError::Usage("--max-uses must be at least 1".into()));
    }
    let options = HotdeckOptions {
        max_uses: a.max_uses,
        stats: if a.pooled_stats { DonorStats::Pooled } else { DonorStats::Donors },
    };
    let result = nn_hotdeck(&data, &a.target, &config, a.seed, &options)?;
    with_output(a.out.as_ref(), |w| {
        result.data.write_csv(w)?;
        Ok(())
    })?;
    if let Some(path) = &a.donor_map {
        with_output(Some(path), |w| {
            result.write_donor_map(w)?;
            Ok(())
        })?;
    }
    Ok(())
}

/// Parses `no.mod,kde1:iqr,...`; a bare name stands for both scalings.
pub fn parse_methods(text: &str) -> Result<Vec<MethodSpec>, String> {
    let mut out: Vec<MethodSpec> = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, scale) = match item.split_once(':') {
            Some((n, s)) => (n, Some(s)),
            None => (item, None),
        };
        let method = MethodKind::parse(name).ok_or_else(|| format!("unknown method {name:?}"))?;
        let scalings = match scale {
            None => vec![Scaling::Range, Scaling::Iqr],
            Some("range") => vec![Scaling::Range],
            Some("iqr") => vec![Scaling::Iqr],
            Some(s) => return Err(format!("unknown scaling {s:?} (range or iqr)")),
        };
        for s in scalings {
            let spec = MethodSpec::new(method, s);
            if !out.contains(&spec) {
                out.push(spec);
            }
        }
    }
    if out.is_empty() {
        return Err("no methods given".into());
    }
    // Range block first, then IQR, each in the canonical method order.
    out.sort_by_key(|m| {
        (
            m.scaling == Scaling::Iqr,
            MethodKind::ALL.iter().position(|k| *k == m.method),
        )
    });
    Ok(out)
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let methods = parse_methods(&a.methods).map_err(|e| CliError::Usage(format!("--methods: {e}")))?;
    let scenario = SimScenario {
        n: a.n,
        reps: a.reps,
        categorization: match a.scenario {
            ScenarioArg::Fourcat => Categorization::FourCat,
            ScenarioArg::Threecat => Categorization::ThreeCat,
        },
        outliers: a.outliers,
        outlier_rate: a.outlier_rate,
        mechanism: match a.mechanism {
            MechanismArg::Mcar => Mechanism::Mcar,
            MechanismArg::Mar => Mechanism::Mar,
            MechanismArg::Mnar => Mechanism::Mnar,
        },
        driver: a.driver.clone(),
        missing_fraction: a.missing_fraction,
        seed: a.seed,
        ..SimScenario::default()
    };
    scenario.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let report = match (&a.data, &a.schema, &a.target) {
        (Some(data), Some(schema), Some(target)) => {
            if a.outliers {
                return Err(CliError::Usage("--outliers applies to artificial data only".into()));
            }
            let schema = read_schema(schema)?;
            let data = read_data(data, "--data", &schema)?;
            if data.column(target).is_none() {
                return Err(CliError::Usage(format!("--target: no column {target:?}")));
            }
            if a.mechanism == MechanismArg::Mar && a.driver.is_none() {
                return Err(CliError::Usage("--mechanism mar on user data needs --driver".into()));
            }
            run_study_on_data(&data, target, &scenario, &methods, a.trace)?
        }
        _ => run_study(&scenario, &methods, a.trace)?,
    };
    if report.partial {
        eprintln!(
            "warning: {} of {} replications failed; the report covers the rest",
            report.reps_requested - report.reps_completed,
            report.reps_requested
        );
    }
    write_json(a.out.as_ref(), &report)
}

fn dummy_report(a: DummyArgs) -> CliResult<()> {
    let schema = read_schema(&a.schema)?;
    let data = read_data(&a.data, "--data", &schema)?;
    let report = dummy_equivalence_report(&data)?;
    write_json(a.out.as_ref(), &report)
}
