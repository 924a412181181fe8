//! Weighted Gower aggregation, the two-step conditional distance, dense
//! distance matrices and top-n matching.

mod config;
mod dummy;
mod reference;

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{Dataset, VariableKind};
use crate::error::{Error, Result};
use crate::pervar::{numeric_kernel, ordinal_kernel, KnnBounds, NumericMethod, NumericScale, OrdinalPolicy, OrdinalReference, Scaling};
use crate::stats::{default_k, knn_threshold_sorted, silverman_bandwidth};

pub use config::{ColumnConfig, ConditionalConfig, DistanceConfig};
pub use dummy::{dummy_equivalence_report, DummyPair, DummyReport, RatioSummary};
pub use reference::{ColumnReference, ReferenceStats, StatsSource};

enum Rule {
    BinarySymmetric,
    BinaryAsymmetric,
    Nominal,
    Ordinal {
        policy: OrdinalPolicy,
        reference: OrdinalReference,
    },
    Numeric {
        method: NumericMethod,
        scale: NumericScale,
        /// Neighbourhood radius of every row of `a` (and of `b` when
        /// symmetrized), for k-nn windows.
        knn_a: Vec<f64>,
        knn_b: Option<Vec<f64>>,
    },
}

struct Prepared<'a> {
    a_vals: &'a [f64],
    a_miss: &'a [bool],
    b_vals: &'a [f64],
    b_miss: &'a [bool],
    weight: f64,
    rule: Rule,
    /// Member of the categorical block of the conditional distance.
    categorical: bool,
}

impl Prepared<'_> {
    /// `(d, delta)` for row `i` of `a` against row `j` of `b`.
    #[inline]
    fn eval(&self, i: usize, j: usize) -> Option<f64> {
        if self.a_miss[i] || self.b_miss[j] {
            return None;
        }
        let (x, y) = (self.a_vals[i], self.b_vals[j]);
        match &self.rule {
            Rule::BinarySymmetric | Rule::Nominal => Some(if x == y { 0.0 } else { 1.0 }),
            Rule::BinaryAsymmetric => {
                if x == 0.0 && y == 0.0 {
                    None
                } else if x == 1.0 && y == 1.0 {
                    Some(0.0)
                } else {
                    Some(1.0)
                }
            }
            Rule::Ordinal { policy, reference } => {
                let r = ordinal_kernel(x as usize, y as usize, *policy, reference);
                r.delta.then_some(r.d)
            }
            Rule::Numeric {
                method,
                scale,
                knn_a,
                knn_b,
            } => {
                let knn = (!knn_a.is_empty()).then(|| KnnBounds {
                    from_i: knn_a[i],
                    from_j: knn_b.as_ref().map(|t| t[j]),
                });
                Some(numeric_kernel((x - y).abs(), method, scale, knn))
            }
        }
    }
}

/// Distance evaluator for rows of `a` (recipients) against rows of `b`
/// (donors), with column parameters frozen from a [`ReferenceStats`].
pub struct GowerEngine<'a> {
    a: &'a Dataset,
    b: &'a Dataset,
    cols: Vec<Prepared<'a>>,
    conditional: bool,
    p_cat: usize,
    tie_seed: u64,
}

impl<'a> GowerEngine<'a> {
    pub fn new(
        a: &'a Dataset,
        b: &'a Dataset,
        config: &DistanceConfig,
        reference: &ReferenceStats,
    ) -> Result<Self> {
        config.validate()?;
        let mut cols = Vec::new();
        for col_a in a.columns() {
            let cfg = config.column(col_a.name());
            if !cfg.include {
                continue;
            }
            let col_b = b.column(col_a.name()).ok_or_else(|| {
                Error::SchemaMismatch(format!("column {:?} missing from second dataset", col_a.name()))
            })?;
            if col_a.kind() != col_b.kind() {
                return Err(Error::SchemaMismatch(format!(
                    "column {:?} has different kinds in the two datasets",
                    col_a.name()
                )));
            }
            let as_numeric_in_cond = config
                .conditional
                .as_ref()
                .is_some_and(|c| c.ordinal_as_numeric);
            let (rule, categorical) = match col_a.kind() {
                VariableKind::BinarySymmetric => (Rule::BinarySymmetric, true),
                VariableKind::BinaryAsymmetric => (Rule::BinaryAsymmetric, true),
                VariableKind::Nominal(_) => (Rule::Nominal, true),
                VariableKind::Ordinal(_) => {
                    let reference = match reference.get(col_a.name()) {
                        Some(ColumnReference::Ordinal(r)) => r.clone(),
                        _ => {
                            return Err(Error::SchemaMismatch(format!(
                                "no ordinal reference for column {:?}",
                                col_a.name()
                            )))
                        }
                    };
                    let policy = cfg.ordinal.unwrap_or(config.ordinal);
                    (Rule::Ordinal { policy, reference }, !as_numeric_in_cond)
                }
                VariableKind::Numeric => {
                    let stats = match reference.get(col_a.name()) {
                        Some(ColumnReference::Numeric(s)) => s,
                        _ => {
                            return Err(Error::SchemaMismatch(format!(
                                "column {:?} has no observed values in the reference rows",
                                col_a.name()
                            )))
                        }
                    };
                    let method = match &config.conditional {
                        Some(c) => match c.scaling {
                            Scaling::Range => NumericMethod::Standard,
                            Scaling::Iqr => NumericMethod::IqrCapped,
                        },
                        None => cfg.numeric.unwrap_or(config.numeric),
                    };
                    method.validate()?;
                    let mut scale = NumericScale::from_stats(stats);
                    scale.bandwidth = match method {
                        NumericMethod::KdeWindow { c, .. } if stats.n_nonmissing >= 2 => {
                            silverman_bandwidth(stats, stats.n_nonmissing, c)?
                        }
                        _ => 0.0,
                    };
                    let (knn_a, knn_b) = match method {
                        NumericMethod::KnnWindow { k, .. } => {
                            let k = k.unwrap_or_else(|| default_k(stats.n_nonmissing));
                            let radius = |x: f64| {
                                knn_threshold_sorted(&stats.sorted_values, x, k).unwrap_or(f64::INFINITY)
                            };
                            let per_row = |d: &Dataset| -> Vec<f64> {
                                let c = d.column(col_a.name()).expect("checked above");
                                c.values()
                                    .iter()
                                    .zip(c.missing_mask())
                                    .map(|(&v, &m)| if m { 0.0 } else { radius(v) })
                                    .collect()
                            };
                            let knn_b = config.knn_symmetrize.then(|| per_row(b));
                            (per_row(a), knn_b)
                        }
                        _ => (Vec::new(), None),
                    };
                    (
                        Rule::Numeric {
                            method,
                            scale,
                            knn_a,
                            knn_b,
                        },
                        false,
                    )
                }
            };
            cols.push(Prepared {
                a_vals: col_a.values(),
                a_miss: col_a.missing_mask(),
                b_vals: col_b.values(),
                b_miss: col_b.missing_mask(),
                weight: cfg.weight,
                rule,
                categorical,
            });
        }
        if cols.is_empty() {
            return Err(Error::Config("no columns included in the distance".into()));
        }
        if cols.iter().all(|c| c.weight == 0.0) && config.conditional.is_none() {
            return Err(Error::Config("all column weights are zero".into()));
        }
        let p_cat = cols.iter().filter(|c| c.categorical).count();
        let conditional = config.conditional.is_some();
        if conditional {
            if p_cat == 0 {
                return Err(Error::Config(
                    "conditional distance needs at least one categorical column".into(),
                ));
            }
            if p_cat == cols.len() {
                return Err(Error::Config(
                    "conditional distance needs at least one numeric column".into(),
                ));
            }
        }
        Ok(Self {
            a,
            b,
            cols,
            conditional,
            p_cat,
            tie_seed: config.tie_seed,
        })
    }

    pub fn n_recipients(&self) -> usize {
        self.a.n_rows()
    }

    pub fn n_donors(&self) -> usize {
        self.b.n_rows()
    }

    /// Weighted mean of valid per-variable distances over the selected
    /// block; `None` when no variable is valid (or all valid weights are 0).
    #[inline]
    fn aggregate(&self, i: usize, j: usize, block: Block) -> Option<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for c in &self.cols {
            let w = match block {
                Block::All => c.weight,
                Block::Categorical if c.categorical => 1.0,
                Block::Numeric if !c.categorical => 1.0,
                _ => continue,
            };
            if let Some(d) = c.eval(i, j) {
                num += w * d;
                den += w;
            }
        }
        (den > 0.0).then(|| num / den)
    }

    /// Distance between row `i` of the first dataset and row `j` of the
    /// second; `None` when undefined.
    pub fn distance(&self, i: usize, j: usize) -> Option<f64> {
        if self.conditional {
            self.row(i)[j]
        } else {
            self.aggregate(i, j, Block::All)
        }
    }

    /// Distances from row `i` to every row of the second dataset.
    pub fn row(&self, i: usize) -> Vec<Option<f64>> {
        let n_b = self.b.n_rows();
        if !self.conditional {
            return (0..n_b).map(|j| self.aggregate(i, j, Block::All)).collect();
        }
        // Step 1: unweighted distance on the categorical block. An undefined
        // categorical distance counts as the maximum.
        let cat: Vec<f64> = (0..n_b)
            .map(|j| self.aggregate(i, j, Block::Categorical).unwrap_or(1.0))
            .collect();
        let Some(threshold) = self.escalated_threshold(&cat) else {
            return Vec::new();
        };
        // Step 2: numeric-only distance inside the admitted pool, 1 outside.
        cat.iter()
            .enumerate()
            .map(|(j, &dc)| {
                if dc <= threshold {
                    self.aggregate(i, j, Block::Numeric)
                } else {
                    Some(1.0)
                }
            })
            .collect()
    }

    /// Smallest `m / p_cat` (m = 1, 2, ...) admitting at least one donor.
    fn escalated_threshold(&self, cat: &[f64]) -> Option<f64> {
        let best = cat.iter().copied().fold(f64::INFINITY, f64::min);
        if !best.is_finite() {
            return None;
        }
        let p = self.p_cat as f64;
        // Correctly rounded quotients of equal rationals compare equal, so
        // `k / p_cat` meets the step-1 distances exactly at the boundary.
        (1..=self.p_cat)
            .map(|m| m as f64 / p)
            .find(|&t| best <= t)
    }

    /// Dense matrix, rows parallelized.
    pub fn matrix(&self) -> DistanceMatrix {
        let rows: Vec<Vec<Option<f64>>> = (0..self.a.n_rows()).into_par_iter().map(|i| self.row(i)).collect();
        DistanceMatrix {
            n_rows: self.a.n_rows(),
            n_cols: self.b.n_rows(),
            values: rows.into_iter().flatten().collect(),
        }
    }

    /// Tie-break key of a (recipient, donor) pair; a function of the seed
    /// and the stable row ids only.
    fn tie_key(&self, i: usize, j: usize) -> u64 {
        tie_key(self.tie_seed, self.a.row_id(i), self.b.row_id(j))
    }

    /// The `n` nearest donors of recipient `i`, best first.
    pub fn nearest(&self, i: usize, n: usize) -> Result<RecipientMatches> {
        self.ranked(i, Some(n))
    }

    /// Every donor with a defined distance, best first.
    pub fn ranking(&self, i: usize) -> Result<RecipientMatches> {
        self.ranked(i, None)
    }

    fn ranked(&self, i: usize, n: Option<usize>) -> Result<RecipientMatches> {
        let row = self.row(i);
        let mut cands: Vec<(f64, u64, usize)> = row
            .iter()
            .enumerate()
            .filter_map(|(j, d)| d.map(|d| (d, self.tie_key(i, j), j)))
            .collect();
        if cands.is_empty() {
            return Err(Error::NoDefinedDonor(i));
        }
        let cmp = |x: &(f64, u64, usize), y: &(f64, u64, usize)| {
            x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2))
        };
        let keep = n.unwrap_or(cands.len()).min(cands.len());
        if keep < cands.len() {
            cands.select_nth_unstable_by(keep, cmp);
            cands.truncate(keep);
        }
        cands.sort_unstable_by(cmp);
        let cut = cands.last().map(|c| c.0).unwrap_or(0.0);
        let ties_at_cut = row.iter().filter(|d| **d == Some(cut)).count();
        Ok(RecipientMatches {
            recipient: i,
            matches: cands
                .into_iter()
                .map(|(distance, _, donor)| Match { donor, distance })
                .collect(),
            ties_at_cut,
        })
    }

    /// Top-n donors for every recipient, recipients in parallel.
    pub fn top_n(&self, n: usize) -> Result<MatchResult> {
        if n == 0 {
            return Err(Error::Config("top-n needs n >= 1".into()));
        }
        if n > self.b.n_rows() {
            return Err(Error::Config(format!(
                "n = {n} exceeds the {} donors",
                self.b.n_rows()
            )));
        }
        let recipients = (0..self.a.n_rows())
            .into_par_iter()
            .map(|i| self.nearest(i, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(MatchResult { n, recipients })
    }
}

#[derive(Clone, Copy)]
enum Block {
    All,
    Categorical,
    Numeric,
}

/// FNV-1a over the seed and both ids, finished with a SplitMix64 mix.
pub(crate) fn tie_key(seed: u64, a: &str, b: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for byte in seed
        .to_le_bytes()
        .iter()
        .chain(a.as_bytes())
        .chain(&[0xff])
        .chain(b.as_bytes())
    {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(PRIME);
    }
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    /// Row-major; `None` marks an undefined distance.
    pub values: Vec<Option<f64>>,
}

impl DistanceMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.n_cols + j]
    }

    pub fn row(&self, i: usize) -> &[Option<f64>] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// CSV with a header of column ids; each line starts with the row id.
    /// Distances have 6 decimals, undefined ones are written as `NA`.
    pub fn write_csv<W: Write>(&self, writer: W, row_ids: &[String], col_ids: &[String]) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(col_ids.iter().cloned());
        w.write_record(&header)?;
        for (i, id) in row_ids.iter().enumerate().take(self.n_rows) {
            let mut rec = Vec::with_capacity(self.n_cols + 1);
            rec.push(id.clone());
            rec.extend(self.row(i).iter().map(|d| match d {
                Some(v) => format!("{v:.6}"),
                None => "NA".to_string(),
            }));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Match {
    pub donor: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecipientMatches {
    pub recipient: usize,
    /// Non-decreasing distances. Donors with undefined distance are never
    /// listed, so the list can be shorter than `n`.
    pub matches: Vec<Match>,
    /// Number of donors at exactly the distance of the last listed match.
    pub ties_at_cut: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    pub n: usize,
    pub recipients: Vec<RecipientMatches>,
}

impl MatchResult {
    /// `recipient_id,rank,donor_id,distance`, distances with 6 decimals.
    pub fn write_csv<W: Write>(&self, writer: W, recipients: &Dataset, donors: &Dataset) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["recipient_id", "rank", "donor_id", "distance"])?;
        for r in &self.recipients {
            for (rank, m) in r.matches.iter().enumerate() {
                w.write_record([
                    recipients.row_id(r.recipient).to_string(),
                    (rank + 1).to_string(),
                    donors.row_id(m.donor).to_string(),
                    format!("{:.6}", m.distance),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Gower distance between `a[i]` and `b[j]`, with stats drawn from `source`.
pub fn gower_distance(
    a: &Dataset,
    i: usize,
    b: &Dataset,
    j: usize,
    config: &DistanceConfig,
    source: StatsSource,
) -> Result<Option<f64>> {
    let reference = ReferenceStats::for_pair(a, b, source)?;
    let engine = GowerEngine::new(a, b, config, &reference)?;
    if i >= a.n_rows() || j >= b.n_rows() {
        return Err(Error::InvalidValue("row index out of range".into()));
    }
    Ok(engine.distance(i, j))
}

/// Matrix of distances of every row of `a` against every row of `b`.
pub fn distance_matrix(a: &Dataset, b: &Dataset, config: &DistanceConfig, source: StatsSource) -> Result<DistanceMatrix> {
    let reference = ReferenceStats::for_pair(a, b, source)?;
    Ok(GowerEngine::new(a, b, config, &reference)?.matrix())
}

/// Two-step conditional distance table of recipients against donors.
pub fn conditional_distance(
    recipients: &Dataset,
    donors: &Dataset,
    config: &DistanceConfig,
    source: StatsSource,
) -> Result<DistanceMatrix> {
    if donors.n_rows() == 0 {
        return Err(Error::Config("no donors".into()));
    }
    let mut config = config.clone();
    if config.conditional.is_none() {
        config.conditional = Some(ConditionalConfig::default());
    }
    distance_matrix(recipients, donors, &config, source)
}

/// Top-n donors for every recipient; stats from the donors unless `source`
/// says otherwise.
pub fn top_n_matches(
    recipients: &Dataset,
    donors: &Dataset,
    config: &DistanceConfig,
    n: usize,
    source: StatsSource,
) -> Result<MatchResult> {
    let reference = ReferenceStats::for_pair(recipients, donors, source)?;
    GowerEngine::new(recipients, donors, config, &reference)?.top_n(n)
}
