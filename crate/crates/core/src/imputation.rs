//! Nearest-neighbour donor hotdeck.

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gower::{DistanceConfig, GowerEngine, ReferenceStats};

/// Rows whose column parameters define the distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DonorStats {
    /// Donor rows only.
    #[default]
    Donors,
    /// Every row of the dataset.
    Pooled,
}

#[derive(Debug, Clone, Default)]
pub struct HotdeckOptions {
    /// Maximum number of recipients a donor may serve; unlimited when
    /// `None`. With a cap, recipients are served in row order.
    pub max_uses: Option<usize>,
    pub stats: DonorStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DonorAssignment {
    /// Row of the recipient in the input dataset.
    pub recipient: usize,
    /// Row of the donor in the input dataset.
    pub donor: usize,
    pub distance: f64,
    /// Donors at exactly the chosen distance (1 when there was no tie).
    pub ties: usize,
}

#[derive(Debug, Clone)]
pub struct ImputationResult {
    pub data: Dataset,
    pub assignments: Vec<DonorAssignment>,
}

impl ImputationResult {
    /// `recipient_id,donor_id,distance` with 6-decimal distances.
    pub fn write_donor_map<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["recipient_id", "donor_id", "distance"])?;
        for a in &self.assignments {
            w.write_record([
                self.data.row_id(a.recipient),
                self.data.row_id(a.donor),
                &format!("{:.6}", a.distance),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fills every missing cell of `target` with the value of the closest donor
/// (a row where `target` is observed). The target never enters the distance.
/// Ties between equally close donors are broken by `seed`.
pub fn nn_hotdeck(
    data: &Dataset,
    target: &str,
    config: &DistanceConfig,
    seed: u64,
    options: &HotdeckOptions,
) -> Result<ImputationResult> {
    let target_idx = data
        .column_index(target)
        .ok_or_else(|| Error::Config(format!("target column {target:?} not found")))?;
    let target_col = &data.columns()[target_idx];
    let (recipients, donors): (Vec<usize>, Vec<usize>) =
        (0..data.n_rows()).partition(|&r| target_col.is_missing(r));
    if recipients.is_empty() {
        return Err(Error::Config(format!("target {target:?} has no missing values")));
    }
    if donors.is_empty() {
        return Err(Error::Config(format!("target {target:?} has no observed values")));
    }

    let config = config.clone().excluding(target).with_tie_seed(seed);
    let used: Vec<_> = data
        .columns()
        .iter()
        .filter(|c| c.name() != target && config.column(c.name()).include)
        .collect();
    if let Some(&r) = recipients.iter().find(|&&r| used.iter().all(|c| c.is_missing(r))) {
        return Err(Error::InvalidValue(format!(
            "row {} is missing the target and every distance variable",
            r + 1
        )));
    }

    let rec = data.select_rows(&recipients)?;
    let don = data.select_rows(&donors)?;
    let reference = match options.stats {
        DonorStats::Donors => ReferenceStats::from_dataset(&don)?,
        DonorStats::Pooled => ReferenceStats::from_dataset(data)?,
    };
    let engine = GowerEngine::new(&rec, &don, &config, &reference)?;

    let picks: Vec<(usize, f64, usize)> = match options.max_uses {
        None => (0..rec.n_rows())
            .into_par_iter()
            .map(|i| {
                let m = engine.nearest(i, 1).map_err(|_| Error::NoDefinedDonor(recipients[i]))?;
                let best = m.matches[0];
                Ok((best.donor, best.distance, m.ties_at_cut))
            })
            .collect::<Result<_>>()?,
        Some(0) => return Err(Error::Config("max uses must be at least 1".into())),
        Some(cap) => {
            let rankings = (0..rec.n_rows())
                .into_par_iter()
                .map(|i| engine.ranking(i).map_err(|_| Error::NoDefinedDonor(recipients[i])))
                .collect::<Result<Vec<_>>>()?;
            let mut uses = vec![0usize; don.n_rows()];
            let mut picks = Vec::with_capacity(rankings.len());
            for r in rankings {
                let m = r
                    .matches
                    .iter()
                    .find(|m| uses[m.donor] < cap)
                    .ok_or(Error::NoDefinedDonor(recipients[r.recipient]))?;
                uses[m.donor] += 1;
                let ties = r.matches.iter().filter(|x| x.distance == m.distance).count();
                picks.push((m.donor, m.distance, ties));
            }
            picks
        }
    };

    let mut out = data.clone();
    let mut assignments = Vec::with_capacity(picks.len());
    for (i, (d, distance, ties)) in picks.into_iter().enumerate() {
        let (recipient, donor) = (recipients[i], donors[d]);
        let value = data.columns()[target_idx].get(donor);
        out.column_mut(target_idx).set(recipient, value);
        assignments.push(DonorAssignment {
            recipient,
            donor,
            distance,
            ties,
        });
    }
    Ok(ImputationResult {
        data: out,
        assignments,
    })
}
