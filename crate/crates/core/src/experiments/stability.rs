use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mean_and_variance;
use crate::dataset::{GroundTruth, Run};
use crate::error::{Error, Result};
use crate::measure::{MeasureSpec, ScoreTable};
use crate::rank_stats::kendall_tau_b;
use crate::seeding::rng_for;

/// Self-agreement of a measure between system rankings on two disjoint
/// random query subsets of equal size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub measure: MeasureSpec,
    pub subset_size: usize,
    pub trials: usize,
    /// Trials where τ-b was undefined (a fully tied ranking); excluded from
    /// the mean and variance.
    pub undefined: usize,
    pub tau_mean: Option<f64>,
    /// Population variance of τ-b over the defined trials.
    pub tau_variance: Option<f64>,
}

/// Runs `trials` subset pairs for every size. All measures see the same
/// subsets in a given trial. Reports are ordered by measure, then size.
pub fn stability_experiment(
    runs: &[Run],
    gt: &GroundTruth,
    specs: &[MeasureSpec],
    subset_sizes: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<StabilityReport>> {
    if runs.len() < 2 {
        return Err(Error::InvalidInput("stability needs at least two runs".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let available = gt.len();
    for &size in subset_sizes {
        if size == 0 {
            return Err(Error::InvalidParameter("subset size must be at least 1".into()));
        }
        if 2 * size > available {
            return Err(Error::InsufficientQueries {
                needed: 2 * size,
                available,
            });
        }
    }
    let table = ScoreTable::build(runs, gt, specs)?;

    // taus[size][trial][measure]
    let taus: Vec<Vec<Vec<Option<f64>>>> = subset_sizes
        .iter()
        .enumerate()
        .map(|(si, &size)| {
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = rng_for(seed, &[si as u64, t as u64]);
                    let picked = index::sample(&mut rng, available, 2 * size).into_vec();
                    let (a, b) = picked.split_at(size);
                    (0..specs.len())
                        .map(|m| {
                            kendall_tau_b(&table.system_means(m, Some(a)), &table.system_means(m, Some(b))).ok()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut reports = Vec::with_capacity(specs.len() * subset_sizes.len());
    for (m, spec) in specs.iter().enumerate() {
        for (si, &size) in subset_sizes.iter().enumerate() {
            let defined: Vec<f64> = taus[si].iter().filter_map(|row| row[m]).collect();
            let stats = mean_and_variance(&defined);
            reports.push(StabilityReport {
                measure: spec.clone(),
                subset_size: size,
                trials,
                undefined: trials - defined.len(),
                tau_mean: stats.map(|s| s.0),
                tau_variance: stats.map(|s| s.1),
            });
        }
    }
    Ok(reports)
}
