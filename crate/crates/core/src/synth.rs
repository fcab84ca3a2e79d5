//! Synthetic ground truth and system runs with controllable quality.
//!
//! For every query a system produces one "on-target" candidate (the ground
//! truth with jittered boundaries) and a set of distractors scattered around
//! the annotated moment. The highest-IoU candidate is ranked first with
//! probability `rank_quality`; otherwise it lands at a uniformly random lower
//! rank. Redundant systems insert near-duplicates of that candidate right
//! below it, which never overtake it in IoU.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Annotation, GroundTruth, RankedList, Run};
use crate::error::{Error, Result};
use crate::interval::{temporal_iou, Interval};
use crate::io::DatasetBundle;
use crate::seeding::{rng_for, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemProfile {
    pub name: String,
    /// Standard deviation (seconds) of the boundary jitter.
    pub localisation_noise: f64,
    /// Probability that the best candidate is ranked first.
    pub rank_quality: f64,
    /// Number of near-duplicates of the best candidate.
    pub redundancy: usize,
    pub list_length: usize,
    /// Multiplier on the length of the on-target candidate. Values above 1
    /// give loose but reliable localisation.
    #[serde(default = "default_scale")]
    pub length_scale: f64,
    /// Profiles sharing a stream draw identical base candidates, so a
    /// redundant system and its clean twin differ only by the duplicates.
    /// Defaults to the profile's position in the scenario.
    #[serde(default)]
    pub stream: Option<u64>,
}

fn default_scale() -> f64 {
    1.0
}

impl SystemProfile {
    pub fn new(name: impl Into<String>, localisation_noise: f64, rank_quality: f64, list_length: usize) -> Self {
        Self {
            name: name.into(),
            localisation_noise,
            rank_quality,
            redundancy: 0,
            list_length,
            length_scale: 1.0,
            stream: None,
        }
    }

    pub fn with_redundancy(mut self, redundancy: usize) -> Self {
        self.redundancy = redundancy;
        self
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = Some(stream);
        self
    }

    pub fn with_length_scale(mut self, scale: f64) -> Self {
        self.length_scale = scale;
        self
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(format!("profile {:?}: {msg}", self.name)));
        if self.list_length == 0 {
            return bad("list length must be at least 1".into());
        }
        if self.redundancy >= self.list_length {
            return bad(format!(
                "redundancy {} must be below list length {}",
                self.redundancy, self.list_length
            ));
        }
        if !(self.localisation_noise.is_finite() && self.localisation_noise >= 0.0) {
            return bad("localisation noise must be nonnegative".into());
        }
        if !(0.0..=1.0).contains(&self.rank_quality) {
            return bad("rank quality must lie in [0, 1]".into());
        }
        if !(self.length_scale.is_finite() && self.length_scale > 0.0) {
            return bad("length scale must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub num_queries: usize,
    /// Video length in seconds, shared by all queries.
    pub video_duration: f64,
    pub gt_length_min: f64,
    pub gt_length_max: f64,
    pub systems: Vec<SystemProfile>,
    pub seed: u64,
}

impl ScenarioConfig {
    fn validate(&self) -> Result<()> {
        if self.num_queries < 2 {
            return Err(Error::InvalidParameter("a scenario needs at least two queries".into()));
        }
        if !(self.gt_length_min > 0.0 && self.gt_length_min <= self.gt_length_max) {
            return Err(Error::InvalidParameter(
                "ground-truth lengths need 0 < min <= max".into(),
            ));
        }
        if self.video_duration.is_nan() || self.video_duration <= self.gt_length_max {
            return Err(Error::InvalidParameter(
                "video duration must exceed the longest ground-truth moment".into(),
            ));
        }
        let mut names = std::collections::BTreeSet::new();
        for p in &self.systems {
            p.validate()?;
            if !names.insert(&p.name) {
                return Err(Error::DuplicateKey(p.name.clone()));
            }
        }
        Ok(())
    }
}

const GT_STREAM: u64 = 0;
const BASE_STREAM: u64 = 1;
const DUPLICATE_STREAM: u64 = 2;

fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Clamps `[start, end]` into `[0, duration]`, keeping a minimum length.
fn clamped(start: f64, end: f64, duration: f64) -> Interval {
    let (mut s, mut e) = if start <= end { (start, end) } else { (end, start) };
    s = s.clamp(0.0, duration);
    e = e.clamp(0.0, duration);
    if e - s < 0.1 {
        let c = (0.5 * (s + e)).clamp(0.05, duration - 0.05);
        s = c - 0.05;
        e = c + 0.05;
    }
    Interval::new(s, e).expect("clamped bounds are ordered and finite")
}

fn on_target(gt: &Interval, profile: &SystemProfile, duration: f64, rng: &mut Rng) -> Interval {
    let s = gt.start() + profile.localisation_noise * normal(rng);
    let e = gt.end() + profile.localisation_noise * normal(rng);
    if profile.length_scale == 1.0 {
        return clamped(s, e, duration);
    }
    let center = 0.5 * (s + e);
    let half = 0.5 * (e - s).abs() * profile.length_scale;
    clamped(center - half, center + half, duration)
}

fn distractor(gt: &Interval, profile: &SystemProfile, duration: f64, rng: &mut Rng) -> Interval {
    let spread = gt.length() + profile.localisation_noise;
    let center = gt.center() + spread * normal(rng);
    let half = 0.5 * gt.length() * rng.gen_range(0.5..1.5);
    clamped(center - half, center + half, duration)
}

fn near_duplicate(best: &Interval, gt: &Interval, duration: f64, rng: &mut Rng) -> Interval {
    let wobble = 0.05 * best.length().max(0.5);
    let dup = clamped(
        best.start() + wobble * normal(rng),
        best.end() + wobble * normal(rng),
        duration,
    );
    if temporal_iou(&dup, gt) <= temporal_iou(best, gt) {
        dup
    } else {
        *best
    }
}

fn ranked_list(
    query_id: &str,
    gt: &Interval,
    profile: &SystemProfile,
    stream: u64,
    query_index: usize,
    cfg: &ScenarioConfig,
) -> RankedList {
    let duration = cfg.video_duration;
    let mut rng = rng_for(cfg.seed, &[BASE_STREAM, stream, query_index as u64]);
    let mut candidates = Vec::with_capacity(profile.list_length);
    candidates.push(on_target(gt, profile, duration, &mut rng));
    for _ in 1..profile.list_length {
        candidates.push(distractor(gt, profile, duration, &mut rng));
    }
    let best_idx = candidates
        .iter()
        .enumerate()
        .max_by(|a, b| temporal_iou(a.1, gt).total_cmp(&temporal_iou(b.1, gt)).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let best = candidates.swap_remove(best_idx);
    candidates.shuffle(&mut rng);
    let n = profile.list_length;
    let best_rank = if n == 1 || rng.gen::<f64>() < profile.rank_quality {
        0
    } else {
        rng.gen_range(1..n)
    };
    candidates.insert(best_rank, best);

    if profile.redundancy > 0 {
        let mut dup_rng = rng_for(cfg.seed, &[DUPLICATE_STREAM, stream, query_index as u64]);
        for i in 0..profile.redundancy {
            let dup = near_duplicate(&best, gt, duration, &mut dup_rng);
            candidates.insert(best_rank + 1 + i, dup);
        }
        candidates.truncate(n);
    }
    RankedList::new(query_id, candidates)
}

pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<DatasetBundle> {
    cfg.validate()?;
    let width = (cfg.num_queries - 1).to_string().len();
    let mut gt = GroundTruth::new();
    let mut targets = Vec::with_capacity(cfg.num_queries);
    for q in 0..cfg.num_queries {
        let mut rng = rng_for(cfg.seed, &[GT_STREAM, q as u64]);
        let length = rng.gen_range(cfg.gt_length_min..=cfg.gt_length_max);
        let start = rng.gen_range(0.0..=(cfg.video_duration - length));
        let interval = Interval::new(start, start + length)?;
        let id = format!("q{q:0width$}");
        gt.insert_annotation(
            id.clone(),
            Annotation {
                interval,
                duration: Some(cfg.video_duration),
            },
        )?;
        targets.push((id, interval));
    }
    let runs = cfg
        .systems
        .iter()
        .enumerate()
        .map(|(i, profile)| {
            let stream = profile.stream.unwrap_or(i as u64);
            let mut run = Run::new(profile.name.clone());
            for (q, (id, interval)) in targets.iter().enumerate() {
                run.insert(ranked_list(id, interval, profile, stream, q, cfg))?;
            }
            Ok(run)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut bundle = DatasetBundle {
        gt,
        runs,
        metadata: Default::default(),
    };
    bundle.metadata.insert("generator".into(), "synth".into());
    bundle.metadata.insert("seed".into(), cfg.seed.to_string());
    bundle.metadata.insert("num_queries".into(), cfg.num_queries.to_string());
    bundle.metadata.insert("video_duration".into(), cfg.video_duration.to_string());
    Ok(bundle)
}

pub const BUNDLED_SEED: u64 = 20_220_620;
pub const BUNDLED_QUERIES: usize = 500;

/// The six system profiles of the bundled scenario.
///
/// `strong` and `strong-nonms` share a stream; the latter adds three
/// near-duplicates below its best moment, as a system without non-maximum
/// suppression would.
pub fn bundled_profiles() -> Vec<SystemProfile> {
    vec![
        SystemProfile::new("strong", 0.6, 0.75, 10).with_stream(1),
        SystemProfile::new("strong-nonms", 0.6, 0.75, 10).with_stream(1).with_redundancy(3),
        SystemProfile::new("mid", 1.0, 0.6, 10).with_stream(2),
        SystemProfile::new("mid-loose", 0.5, 0.6, 10).with_stream(3).with_length_scale(1.5),
        SystemProfile::new("weak", 1.8, 0.45, 10).with_stream(4),
        SystemProfile::new("blind", 5.0, 0.3, 10).with_stream(5),
    ]
}

pub fn bundled_config() -> ScenarioConfig {
    ScenarioConfig {
        num_queries: BUNDLED_QUERIES,
        video_duration: 30.0,
        gt_length_min: 3.0,
        gt_length_max: 12.0,
        systems: bundled_profiles(),
        seed: BUNDLED_SEED,
    }
}

/// Fixed-seed scenario used by the qualitative experiments: 500 queries,
/// six systems.
pub fn bundled_reference_scenario() -> DatasetBundle {
    generate_scenario(&bundled_config()).expect("bundled configuration is valid")
}

/// A grid of model variants for model-selection studies: localisation
/// noise × length scale × rank quality × redundancy (8 × 8 × 5 × 2 = 640).
pub fn model_sweep_profiles() -> Vec<SystemProfile> {
    let noises = [0.3, 0.6, 0.9, 1.2, 1.6, 2.0, 2.5, 3.0];
    let scales = [0.7, 0.85, 1.0, 1.15, 1.3, 1.5, 1.75, 2.0];
    let qualities = [0.3, 0.45, 0.6, 0.75, 0.9];
    let mut profiles = Vec::with_capacity(640);
    let mut stream = 0u64;
    for (ni, &noise) in noises.iter().enumerate() {
        for (si, &scale) in scales.iter().enumerate() {
            for (qi, &quality) in qualities.iter().enumerate() {
                for redundancy in [0, 3] {
                    profiles.push(
                        SystemProfile::new(format!("m{ni}{si}{qi}r{redundancy}"), noise, quality, 10)
                            .with_length_scale(scale)
                            .with_redundancy(redundancy)
                            .with_stream(stream),
                    );
                    stream += 1;
                }
            }
        }
    }
    profiles
}

/// Validation and test splits over the same 640 model variants.
pub fn bundled_selection_scenario(num_queries: usize) -> Result<(DatasetBundle, DatasetBundle)> {
    let base = ScenarioConfig {
        num_queries,
        video_duration: 30.0,
        gt_length_min: 3.0,
        gt_length_max: 12.0,
        systems: model_sweep_profiles(),
        seed: BUNDLED_SEED + 1,
    };
    let validation = generate_scenario(&base)?;
    let test = generate_scenario(&ScenarioConfig {
        seed: BUNDLED_SEED + 2,
        ..base
    })?;
    Ok((validation, test))
}
