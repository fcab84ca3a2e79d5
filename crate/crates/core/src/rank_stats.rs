//! System rankings, Kendall's τ-b and measure agreement.

use serde::{Deserialize, Serialize};

use crate::dataset::{GroundTruth, Run};
use crate::error::{Error, Result};
use crate::measure::{MeasureSpec, ScoreTable};

/// Per-query scores closer than this count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Systems ordered by score, best first. Equal scores stay equal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemRanking {
    pub entries: Vec<(String, f64)>,
}

impl SystemRanking {
    pub fn new(mut entries: Vec<(String, f64)>) -> Result<Self> {
        if let Some((id, s)) = entries.iter().find(|(_, s)| !s.is_finite()) {
            return Err(Error::InvalidInput(format!("score {s} of system {id:?} is not finite")));
        }
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(Self { entries })
    }

    /// Ranks `runs` by their mean under `spec` on every query of `gt`.
    pub fn from_runs(runs: &[Run], gt: &GroundTruth, spec: &MeasureSpec) -> Result<Self> {
        let table = ScoreTable::build(runs, gt, std::slice::from_ref(spec))?;
        Self::new(table.systems.iter().cloned().zip(table.system_means(0, None)).collect())
    }
}

/// Kendall's τ-b between two paired score vectors.
///
/// `(C - D) / sqrt((C + D + Tx) * (C + D + Ty))`, where `Tx` (`Ty`) counts
/// pairs tied only in `x` (only in `y`). Pairs tied in both are ignored.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "score vectors differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput("need at least two paired scores".into()));
    }
    let (mut concordant, mut discordant, mut tied_x, mut tied_y) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i].partial_cmp(&x[j]);
            let dy = y[i].partial_cmp(&y[j]);
            let (dx, dy) = match (dx, dy) {
                (Some(dx), Some(dy)) => (dx, dy),
                _ => return Err(Error::InvalidInput("scores must not be NaN".into())),
            };
            use std::cmp::Ordering::Equal;
            match (dx, dy) {
                (Equal, Equal) => {}
                (Equal, _) => tied_x += 1,
                (_, Equal) => tied_y += 1,
                (a, b) if a == b => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let left = concordant + discordant + tied_x;
    let right = concordant + discordant + tied_y;
    if left == 0 || right == 0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((concordant as f64 - discordant as f64) / ((left * right) as f64).sqrt())
}

/// Pairwise τ-b between the system rankings induced by several measures.
/// Undefined correlations are left as `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementMatrix {
    pub measures: Vec<MeasureSpec>,
    pub values: Vec<Vec<Option<f64>>>,
}

pub fn agreement_matrix(runs: &[Run], gt: &GroundTruth, specs: &[MeasureSpec]) -> Result<AgreementMatrix> {
    if runs.len() < 2 {
        return Err(Error::InvalidInput("agreement needs at least two runs".into()));
    }
    let table = ScoreTable::build(runs, gt, specs)?;
    Ok(agreement_from_table(&table))
}

pub fn agreement_from_table(table: &ScoreTable) -> AgreementMatrix {
    let means: Vec<Vec<f64>> = (0..table.measures.len())
        .map(|m| table.system_means(m, None))
        .collect();
    let n = means.len();
    let mut values = vec![vec![None; n]; n];
    for i in 0..n {
        for j in i..n {
            let tau = kendall_tau_b(&means[i], &means[j]).ok();
            values[i][j] = tau;
            values[j][i] = tau;
        }
    }
    AgreementMatrix {
        measures: table.measures.clone(),
        values,
    }
}

/// Fraction of queries on which every run gets the same score under `spec`.
pub fn all_tied_ratio(runs: &[Run], gt: &GroundTruth, spec: &MeasureSpec) -> Result<f64> {
    if runs.len() < 2 {
        return Err(Error::InvalidInput("tie analysis needs at least two runs".into()));
    }
    let table = ScoreTable::build(runs, gt, std::slice::from_ref(spec))?;
    Ok(all_tied_ratio_from_table(&table, 0))
}

pub fn all_tied_ratio_from_table(table: &ScoreTable, m: usize) -> f64 {
    let per_system = &table.scores[m];
    let nq = table.queries.len();
    let tied = (0..nq)
        .filter(|&q| {
            let first = per_system[0][q];
            per_system.iter().all(|s| (s[q] - first).abs() <= TIE_TOLERANCE)
        })
        .count();
    tied as f64 / nq as f64
}
