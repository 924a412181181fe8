use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::generate::{categorize_equal_width, generate_mvn_sample, inject_outliers, MVN_MEAN, MVN_SD};
use super::metrics::{
    average_quantile_deviations, empirical_quantiles, gaussian_reference_quantiles, metric_mean_reproduction,
    pearson, quantile_deviation,
};
use super::missing::{delete_values, Mechanism};
use super::{MethodSpec, MethodSummary, RepTrace, SimReport, SimScenario};
use crate::dataset::{Column, Dataset};
use crate::error::{Error, Result};
use crate::imputation::{nn_hotdeck, HotdeckOptions};
use crate::stats::quantile_sorted;

const TARGET: &str = "Y";
const DEFAULT_DRIVER: &str = "X1";

/// Outcome of one method in one replication.
#[derive(Debug, Clone, Copy)]
struct MethodRep {
    rho: Option<f64>,
    mean: f64,
    dq: f64,
    rsdq: f64,
}

type RepOutcome = std::result::Result<Vec<MethodRep>, String>;

fn rep_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

/// Artificial-data study: Gaussian draws, categorization, optional outliers on
/// `X1`, deletion of part of `Y`, imputation with every method.
pub fn run_study(scenario: &SimScenario, methods: &[MethodSpec], trace: bool) -> Result<SimReport> {
    scenario.validate()?;
    check_methods(methods)?;
    let driver = scenario.driver.clone().unwrap_or_else(|| DEFAULT_DRIVER.to_string());
    if driver == TARGET {
        return Err(Error::Config("the MAR driver must differ from the target".into()));
    }
    let outcomes: Vec<RepOutcome> = (0..scenario.reps)
        .into_par_iter()
        .map(|rep| artificial_rep(scenario, methods, &driver, rep).map_err(|e| e.to_string()))
        .collect();
    assemble(scenario, None, MVN_MEAN, methods, outcomes, trace)
}

fn artificial_rep(scenario: &SimScenario, methods: &[MethodSpec], driver: &str, rep: usize) -> Result<Vec<MethodRep>> {
    let mut rng = rep_rng(scenario.seed, rep);
    let mut data = generate_mvn_sample(scenario.n, &mut rng)?;
    for &(name, classes) in scenario.categorization.classes() {
        let col = categorize_equal_width(column(&data, name)?, classes)?;
        data.replace_column(col);
    }
    if scenario.outliers {
        let (col, _) = inject_outliers(
            column(&data, "X1")?,
            scenario.outlier_rate,
            scenario.outlier_mean,
            scenario.outlier_sd,
            &mut rng,
        )?;
        data.replace_column(col);
    }
    let complete: Vec<f64> = column(&data, TARGET)?.values().to_vec();
    let reference = gaussian_reference_quantiles(MVN_MEAN, MVN_SD, &complete)?;
    let driver_col = match scenario.mechanism {
        Mechanism::Mar => Some(column(&data, driver)?),
        _ => None,
    };
    let mask = delete_values(column(&data, TARGET)?, scenario.mechanism, driver_col, scenario.missing_fraction, &mut rng)?;
    let tie_seed = rng.next_u64();
    impute_all(&data, TARGET, &complete, &mask, &reference, methods, tie_seed)
}

/// Study on a user dataset: rows with an observed `target` form the complete
/// sample; every replication draws a fresh deletion mask over it.
pub fn run_study_on_data(
    data: &Dataset,
    target: &str,
    scenario: &SimScenario,
    methods: &[MethodSpec],
    trace: bool,
) -> Result<SimReport> {
    scenario.validate()?;
    check_methods(methods)?;
    if scenario.outliers {
        return Err(Error::Config("outlier injection applies to artificial data only".into()));
    }
    let target_col = column(data, target)?;
    if !target_col.kind().is_numeric() {
        return Err(Error::InvalidColumn {
            column: target.to_string(),
            reason: "simulation target must be numeric".into(),
        });
    }
    let rows: Vec<usize> = (0..data.n_rows()).filter(|&r| !target_col.is_missing(r)).collect();
    if rows.len() < 4 {
        return Err(Error::InvalidColumn {
            column: target.to_string(),
            reason: "fewer than 4 observed values".into(),
        });
    }
    let data = data.select_rows(&rows)?;
    if data.n_cols() < 2 {
        return Err(Error::Config("no variables besides the target".into()));
    }
    let driver = match scenario.mechanism {
        Mechanism::Mar => {
            let name = scenario
                .driver
                .as_deref()
                .ok_or_else(|| Error::Config("MAR deletion on user data requires a driver column".into()))?;
            if name == target {
                return Err(Error::Config("the MAR driver must differ from the target".into()));
            }
            Some(column(&data, name)?)
        }
        _ => None,
    };
    let complete: Vec<f64> = column(&data, target)?.values().to_vec();
    let mu = complete.iter().sum::<f64>() / complete.len() as f64;
    let reference = empirical_quantiles(&complete);
    let outcomes: Vec<RepOutcome> = (0..scenario.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rep_rng(scenario.seed, rep);
            let mask = delete_values(column(&data, target)?, scenario.mechanism, driver, scenario.missing_fraction, &mut rng)?;
            let tie_seed = rng.next_u64();
            impute_all(&data, target, &complete, &mask, &reference, methods, tie_seed)
        })
        .map(|r| r.map_err(|e| e.to_string()))
        .collect();
    let mut scenario = scenario.clone();
    scenario.n = data.n_rows();
    assemble(&scenario, Some(target.to_string()), mu, methods, outcomes, trace)
}

fn check_methods(methods: &[MethodSpec]) -> Result<()> {
    if methods.is_empty() {
        return Err(Error::Config("no methods to compare".into()));
    }
    for (k, m) in methods.iter().enumerate() {
        if methods[..k].contains(m) {
            return Err(Error::Config(format!("method {} ({:?}) listed twice", m.method.label(), m.scaling)));
        }
    }
    Ok(())
}

fn column<'a>(data: &'a Dataset, name: &str) -> Result<&'a Column> {
    data.column(name)
        .ok_or_else(|| Error::Config(format!("column {name:?} not found")))
}

/// Masks `target` and imputes it with every method on the same masked data.
fn impute_all(
    data: &Dataset,
    target: &str,
    complete: &[f64],
    mask: &[bool],
    reference: &[f64],
    methods: &[MethodSpec],
    tie_seed: u64,
) -> Result<Vec<MethodRep>> {
    let mut masked = data.clone();
    let idx = data.column_index(target).expect("target present");
    for (row, &m) in mask.iter().enumerate() {
        if m {
            masked.column_mut(idx).set(row, None);
        }
    }
    let deleted: Vec<usize> = (0..mask.len()).filter(|&r| mask[r]).collect();
    let truth: Vec<f64> = deleted.iter().map(|&r| complete[r]).collect();
    methods
        .iter()
        .map(|m| {
            let imputed = nn_hotdeck(&masked, target, &m.distance_config(), tie_seed, &HotdeckOptions::default())?;
            let filled = imputed.data.columns()[idx].values();
            let estimates: Vec<f64> = deleted.iter().map(|&r| filled[r]).collect();
            let mean = filled.iter().sum::<f64>() / filled.len() as f64;
            let mut sorted = filled.to_vec();
            sorted.sort_by(f64::total_cmp);
            let q: Vec<f64> = super::metrics::quantile_levels()
                .into_iter()
                .map(|p| quantile_sorted(&sorted, p))
                .collect();
            let (dq, rsdq) = quantile_deviation(&q, reference)?;
            Ok(MethodRep {
                rho: pearson(&estimates, &truth),
                mean,
                dq,
                rsdq,
            })
        })
        .collect()
}

fn assemble(
    scenario: &SimScenario,
    target: Option<String>,
    mu: f64,
    methods: &[MethodSpec],
    outcomes: Vec<RepOutcome>,
    trace: bool,
) -> Result<SimReport> {
    let mut failures = Vec::new();
    let mut completed: Vec<(usize, Vec<MethodRep>)> = Vec::new();
    for (rep, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => completed.push((rep, r)),
            Err(e) => failures.push(format!("rep {rep}: {e}")),
        }
    }
    if completed.is_empty() {
        return Err(Error::Simulation(format!(
            "every replication failed; first error: {}",
            failures.first().map(String::as_str).unwrap_or("none")
        )));
    }

    let mut summaries = Vec::with_capacity(methods.len());
    for (k, m) in methods.iter().enumerate() {
        let reps: Vec<MethodRep> = completed.iter().map(|(_, r)| r[k]).collect();
        let rhos: Vec<f64> = reps.iter().filter_map(|r| r.rho).collect();
        let means: Vec<f64> = reps.iter().map(|r| r.mean).collect();
        let (s_b, s_rmse) = metric_mean_reproduction(&means, mu)?;
        let deviations: Vec<(f64, f64)> = reps.iter().map(|r| (r.dq, r.rsdq)).collect();
        let (s_dq, s_rsdq) = average_quantile_deviations(&deviations);
        summaries.push(MethodSummary {
            method: m.method,
            scaling: m.scaling,
            rho: (!rhos.is_empty()).then(|| rhos.iter().sum::<f64>() / rhos.len() as f64),
            s_b: Some(s_b),
            s_rmse: Some(s_rmse),
            s_dq: Some(s_dq),
            s_rsdq: Some(s_rsdq),
            reps: reps.len(),
            rho_reps: rhos.len(),
        });
    }

    let traces = if trace {
        completed
            .iter()
            .flat_map(|(rep, r)| {
                methods.iter().zip(r).map(move |(m, x)| RepTrace {
                    rep: *rep,
                    method: m.method,
                    scaling: m.scaling,
                    rho: x.rho,
                    mean: x.mean,
                    dq: x.dq,
                    rsdq: x.rsdq,
                })
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(SimReport {
        scenario: scenario.clone(),
        target,
        mu,
        methods: summaries,
        reps_requested: scenario.reps,
        reps_completed: completed.len(),
        partial: completed.len() < scenario.reps,
        failures,
        traces,
    })
}
