use std::collections::BTreeMap;

use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Annotation, GroundTruth, Run};
use crate::error::{Error, Result};
use crate::interval::{temporal_iou, Interval};
use crate::measure::{MeasureSpec, ScoreTable};
use crate::seeding::{rng_for, Rng};

/// How one rater's boundary is drawn around an annotation `(s*, e*)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// Start `s ~ N(s*, β²)` (β in seconds), length `l ~ Exp(mean e* - s*)`.
    Annotators { beta2: f64 },
    /// Every rater reproduces the annotation exactly (the β² → 0 limit with
    /// the length fixed at its mean).
    Noiseless,
}

impl NoiseModel {
    pub fn beta2(&self) -> f64 {
        match self {
            NoiseModel::Annotators { beta2 } => *beta2,
            NoiseModel::Noiseless => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub model: NoiseModel,
    /// Raters per annotation; the noisy label is the per-coordinate median.
    pub raters: usize,
    /// Independent noisy datasets.
    pub replicas: usize,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn annotators(beta2: f64, raters: usize, replicas: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            model: NoiseModel::Annotators { beta2 },
            raters,
            replicas,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn noiseless(raters: usize, replicas: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            model: NoiseModel::Noiseless,
            raters,
            replicas,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let NoiseModel::Annotators { beta2 } = self.model {
            if !(beta2.is_finite() && beta2 > 0.0) {
                return Err(Error::InvalidParameter(format!("beta^2 must be positive, got {beta2}")));
            }
        }
        if self.raters.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "number of raters must be odd, got {}",
                self.raters
            )));
        }
        if self.replicas == 0 {
            return Err(Error::InvalidParameter("replicas must be at least 1".into()));
        }
        Ok(())
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values[values.len() / 2]
}

/// Draws `raters` noisy boundaries and returns their per-coordinate median,
/// clamped to the video (`start >= 0`, `end <= duration` when known).
pub fn noisy_annotation(annotation: &Annotation, cfg: &NoiseConfig, rng: &mut Rng) -> Result<Interval> {
    let gt = annotation.interval;
    let mean_length = gt.length();
    if mean_length <= 0.0 {
        return Err(Error::DegenerateAnnotation(format!("[{}, {}]", gt.start(), gt.end())));
    }
    let mut starts = Vec::with_capacity(cfg.raters);
    let mut ends = Vec::with_capacity(cfg.raters);
    for _ in 0..cfg.raters {
        let (s, l) = match cfg.model {
            NoiseModel::Annotators { beta2 } => {
                let z: f64 = StandardNormal.sample(rng);
                let e: f64 = Exp1.sample(rng);
                (gt.start() + beta2.sqrt() * z, mean_length * e)
            }
            NoiseModel::Noiseless => (gt.start(), mean_length),
        };
        starts.push(s);
        ends.push(s + l);
    }
    let mut start = median(&mut starts).max(0.0);
    let mut end = median(&mut ends);
    if let Some(d) = annotation.duration {
        start = start.min(d);
        end = end.min(d);
    }
    Interval::new(start, end.max(start))
}

/// Estimation error of each measure under annotation noise at one noise level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub measure: MeasureSpec,
    pub beta2: f64,
    pub replicas: usize,
    /// RMSE between the mean on the original annotations and the means on
    /// the noisy replicas, per system.
    pub rmse_per_system: BTreeMap<String, f64>,
    pub mean_rmse: f64,
    /// Mean over replicas (and queries) of the IoU between the original and
    /// the median-aggregated noisy annotation.
    pub mean_median_iou: f64,
}

struct Replica {
    means: Vec<Vec<f64>>,
    mean_iou: f64,
}

fn replica(runs: &[Run], gt: &GroundTruth, specs: &[MeasureSpec], cfg: &NoiseConfig, index: usize) -> Result<Replica> {
    let mut rng = rng_for(cfg.seed, &[index as u64]);
    let noisy = gt.map_intervals(|q, a| {
        noisy_annotation(a, cfg, &mut rng).map_err(|e| match e {
            Error::DegenerateAnnotation(_) => Error::DegenerateAnnotation(format!("for query {q:?}")),
            other => other,
        })
    })?;
    let mean_iou = gt
        .iter()
        .zip(noisy.iter())
        .map(|((_, a), (_, b))| temporal_iou(&a.interval, &b.interval))
        .sum::<f64>()
        / gt.len() as f64;
    let table = ScoreTable::build(runs, &noisy, specs)?;
    Ok(Replica {
        means: (0..specs.len()).map(|m| table.system_means(m, None)).collect(),
        mean_iou,
    })
}

/// For each noise configuration, regenerates the annotations `replicas` times
/// and measures how far each system's mean drifts from its value on the
/// original annotations. Reports are ordered by measure, then configuration.
///
/// Replica `i` of every configuration draws from the same random stream
/// (`seed`, `i`), so noise levels are compared on common random numbers when
/// the configurations share a seed.
pub fn noise_experiment(
    runs: &[Run],
    gt: &GroundTruth,
    specs: &[MeasureSpec],
    configs: &[NoiseConfig],
) -> Result<Vec<NoiseReport>> {
    for cfg in configs {
        cfg.validate()?;
    }
    let original = ScoreTable::build(runs, gt, specs)?;
    let original_means: Vec<Vec<f64>> = (0..specs.len()).map(|m| original.system_means(m, None)).collect();

    let per_config: Vec<Vec<Replica>> = configs
        .iter()
        .map(|cfg| {
            (0..cfg.replicas)
                .into_par_iter()
                .map(|i| replica(runs, gt, specs, cfg, i))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut reports = Vec::with_capacity(specs.len() * configs.len());
    for (m, spec) in specs.iter().enumerate() {
        for (cfg, replicas) in configs.iter().zip(&per_config) {
            let n = replicas.len() as f64;
            let rmse_per_system: BTreeMap<String, f64> = runs
                .iter()
                .enumerate()
                .map(|(s, run)| {
                    let mse = replicas
                        .iter()
                        .map(|r| {
                            let d = r.means[m][s] - original_means[m][s];
                            d * d
                        })
                        .sum::<f64>()
                        / n;
                    (run.system_id.clone(), mse.sqrt())
                })
                .collect();
            let mean_rmse = rmse_per_system.values().sum::<f64>() / runs.len() as f64;
            reports.push(NoiseReport {
                measure: spec.clone(),
                beta2: cfg.model.beta2(),
                replicas: cfg.replicas,
                rmse_per_system,
                mean_rmse,
                mean_median_iou: replicas.iter().map(|r| r.mean_iou).sum::<f64>() / n,
            });
        }
    }
    Ok(reports)
}
