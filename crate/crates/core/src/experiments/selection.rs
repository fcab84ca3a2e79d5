use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::mean_and_variance;
use crate::dataset::{GroundTruth, Run};
use crate::error::{Error, Result};
use crate::measure::{MeasureSpec, ScoreTable};

/// Spread below which a test column counts as constant.
const DEGENERATE_STD: f64 = 1e-12;

/// Which model each validation measure picks, and how the picks compare on
/// the test split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub validation_specs: Vec<MeasureSpec>,
    pub test_specs: Vec<MeasureSpec>,
    /// Model chosen by each validation spec.
    pub chosen: Vec<String>,
    /// `test_scores[v][t]`: test mean of the model chosen by validation spec
    /// `v` under test spec `t`.
    pub test_scores: Vec<Vec<f64>>,
    /// Same shape as `test_scores`, standardized per test spec across the
    /// chosen models (population standard deviation).
    pub z_scores: Vec<Vec<f64>>,
    /// Per test spec: all chosen models score the same, so every Z is 0.
    pub degenerate: Vec<bool>,
}

fn model_ids(runs: &[Run]) -> Result<BTreeSet<&str>> {
    let mut ids = BTreeSet::new();
    for run in runs {
        if !ids.insert(run.system_id.as_str()) {
            return Err(Error::DuplicateKey(run.system_id.clone()));
        }
    }
    Ok(ids)
}

/// Picks the best validation model per validation spec (ties go to the
/// smallest model id) and standardizes the picks' test scores.
pub fn model_selection(
    validation_runs: &[Run],
    test_runs: &[Run],
    gt_validation: &GroundTruth,
    gt_test: &GroundTruth,
    validation_specs: &[MeasureSpec],
    test_specs: &[MeasureSpec],
) -> Result<SelectionReport> {
    if validation_runs.is_empty() {
        return Err(Error::InvalidInput("model selection needs at least one model".into()));
    }
    if validation_specs.is_empty() || test_specs.is_empty() {
        return Err(Error::InvalidParameter("validation and test specs must be nonempty".into()));
    }
    let val_ids = model_ids(validation_runs)?;
    let test_ids = model_ids(test_runs)?;
    if val_ids != test_ids {
        let missing = val_ids.symmetric_difference(&test_ids).next().unwrap();
        return Err(Error::InvalidInput(format!(
            "validation and test runs must cover the same models; {missing:?} appears in only one"
        )));
    }

    let val_table = ScoreTable::build(validation_runs, gt_validation, validation_specs)?;
    let chosen: Vec<String> = (0..validation_specs.len())
        .map(|v| {
            let means = val_table.system_means(v, None);
            let best = (0..validation_runs.len())
                .max_by(|&a, &b| {
                    means[a]
                        .total_cmp(&means[b])
                        .then_with(|| validation_runs[b].system_id.cmp(&validation_runs[a].system_id))
                })
                .unwrap();
            validation_runs[best].system_id.clone()
        })
        .collect();

    let picked: BTreeSet<&str> = chosen.iter().map(String::as_str).collect();
    let picked_runs: Vec<Run> = test_runs
        .iter()
        .filter(|r| picked.contains(r.system_id.as_str()))
        .cloned()
        .collect();
    let test_table = ScoreTable::build(&picked_runs, gt_test, test_specs)?;
    let test_means: Vec<Vec<f64>> = (0..test_specs.len()).map(|t| test_table.system_means(t, None)).collect();
    let column = |id: &str| picked_runs.iter().position(|r| r.system_id == id).unwrap();

    let test_scores: Vec<Vec<f64>> = chosen
        .iter()
        .map(|id| {
            let s = column(id);
            test_means.iter().map(|col| col[s]).collect()
        })
        .collect();

    let mut z_scores = vec![vec![0.0; test_specs.len()]; chosen.len()];
    let mut degenerate = vec![false; test_specs.len()];
    for t in 0..test_specs.len() {
        let col: Vec<f64> = test_scores.iter().map(|row| row[t]).collect();
        let (mean, var) = mean_and_variance(&col).unwrap();
        let std = var.sqrt();
        if std <= DEGENERATE_STD * mean.abs().max(1.0) {
            degenerate[t] = true;
            continue;
        }
        for (v, score) in col.iter().enumerate() {
            z_scores[v][t] = (score - mean) / std;
        }
    }

    Ok(SelectionReport {
        validation_specs: validation_specs.to_vec(),
        test_specs: test_specs.to_vec(),
        chosen,
        test_scores,
        z_scores,
        degenerate,
    })
}
