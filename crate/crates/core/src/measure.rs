//! Named, parameterised measures and their evaluation over a query set.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{relevance_scores, GroundTruth, Run};
use crate::error::{Error, Result};
use crate::metrics::{self, check_cutoff, check_threshold};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// A discrete stopping-rank distribution over ranks `1..=K`.
#[derive(Clone, Debug, PartialEq)]
pub struct Abandonment(Vec<f64>);

impl Abandonment {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter(
                "abandonment distribution needs at least one rank".into(),
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "abandonment weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "abandonment weights must sum to 1, got {sum}"
            )));
        }
        Ok(Self(weights))
    }

    pub fn uniform(k: usize) -> Result<Self> {
        check_cutoff(k)?;
        Ok(Self(vec![1.0 / k as f64; k]))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn cutoff(&self) -> usize {
        self.0.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Recall,
    Axiou,
    Ncxiou,
    Ap,
    Dcg,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Recall => "recall",
            Family::Axiou => "axiou",
            Family::Ncxiou => "ncxiou",
            Family::Ap => "ap",
            Family::Dcg => "dcg",
        }
    }
}

/// A measure usable uniformly by every experiment.
///
/// The textual form is `family@K[:theta]`, e.g. `axiou@10`, `recall@5:0.5`,
/// `ap@5:0.5`, `dcg@10`. NCxIoU takes its weights instead of a cutoff, joined
/// by `/`: `ncxiou@0.25/0.75`.
#[derive(Clone, Debug, PartialEq)]
pub enum MeasureSpec {
    Recall { k: usize, theta: f64 },
    Axiou { k: usize },
    Ncxiou { abandonment: Abandonment },
    Ap { k: usize, theta: f64 },
    Dcg { k: usize },
}

impl MeasureSpec {
    pub fn recall(k: usize, theta: f64) -> Result<Self> {
        check_cutoff(k)?;
        check_threshold(theta)?;
        Ok(Self::Recall { k, theta })
    }

    pub fn axiou(k: usize) -> Result<Self> {
        check_cutoff(k)?;
        Ok(Self::Axiou { k })
    }

    pub fn ncxiou(abandonment: Abandonment) -> Self {
        Self::Ncxiou { abandonment }
    }

    pub fn ap(k: usize, theta: f64) -> Result<Self> {
        check_cutoff(k)?;
        check_threshold(theta)?;
        Ok(Self::Ap { k, theta })
    }

    pub fn dcg(k: usize) -> Result<Self> {
        check_cutoff(k)?;
        Ok(Self::Dcg { k })
    }

    pub fn family(&self) -> Family {
        match self {
            Self::Recall { .. } => Family::Recall,
            Self::Axiou { .. } => Family::Axiou,
            Self::Ncxiou { .. } => Family::Ncxiou,
            Self::Ap { .. } => Family::Ap,
            Self::Dcg { .. } => Family::Dcg,
        }
    }

    pub fn cutoff(&self) -> usize {
        match self {
            Self::Recall { k, .. } | Self::Axiou { k } | Self::Ap { k, .. } | Self::Dcg { k } => *k,
            Self::Ncxiou { abandonment } => abandonment.cutoff(),
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match self {
            Self::Recall { theta, .. } | Self::Ap { theta, .. } => Some(*theta),
            _ => None,
        }
    }

    /// Per-query value of this measure for a relevance list.
    pub fn score(&self, rel: &[f64]) -> f64 {
        match self {
            Self::Recall { k, theta } => metrics::recall_unchecked(rel, *k, *theta),
            Self::Axiou { k } => metrics::axiou_unchecked(rel, *k),
            Self::Ncxiou { abandonment } => metrics::ncxiou_unchecked(rel, abandonment.weights()),
            Self::Ap { k, theta } => metrics::ap_unchecked(rel, *k, *theta),
            Self::Dcg { k } => metrics::dcg_at(rel, *k).unwrap_or(0.0),
        }
    }

    /// Arithmetic mean of [`MeasureSpec::score`] over several relevance lists.
    pub fn mean_score<'a, I>(&self, lists: I) -> f64
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        mean(lists.into_iter().map(|rel| self.score(rel)))
    }

    /// The defaults the command line uses when no measures are given:
    /// R@K,θ for K ∈ {1,5,10}, θ ∈ {0.3,0.5,0.7} followed by AxIoU@{1,5,10}.
    pub fn standard_set() -> Vec<MeasureSpec> {
        let mut specs = Vec::new();
        for k in [1, 5, 10] {
            for theta in [0.3, 0.5, 0.7] {
                specs.push(MeasureSpec::Recall { k, theta });
            }
        }
        for k in [1, 5, 10] {
            specs.push(MeasureSpec::Axiou { k });
        }
        specs
    }

    /// Parses a comma-separated list of measure strings.
    pub fn parse_list(s: &str) -> Result<Vec<MeasureSpec>> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect()
    }
}

pub(crate) fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut n = 0usize;
    let mut total = 0.0;
    for v in values {
        total += v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Recall { k, theta } => write!(f, "recall@{k}:{theta}"),
            Self::Axiou { k } => write!(f, "axiou@{k}"),
            Self::Ap { k, theta } => write!(f, "ap@{k}:{theta}"),
            Self::Dcg { k } => write!(f, "dcg@{k}"),
            Self::Ncxiou { abandonment } => {
                write!(f, "ncxiou@")?;
                for (i, w) in abandonment.weights().iter().enumerate() {
                    if i > 0 {
                        write!(f, "/")?;
                    }
                    write!(f, "{w}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for MeasureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let token = s.trim();
        let unknown = || Error::UnknownMeasure(token.to_owned());
        let (family, params) = token.split_once('@').ok_or_else(unknown)?;
        let family = family.to_ascii_lowercase();

        if family == "ncxiou" {
            let weights = params
                .split('/')
                .map(|w| w.trim().parse::<f64>().map_err(|_| unknown()))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Self::ncxiou(Abandonment::new(weights)?));
        }

        let (k, theta) = match params.split_once(':') {
            Some((k, t)) => (k, Some(t.trim().parse::<f64>().map_err(|_| unknown())?)),
            None => (params, None),
        };
        let k: usize = k.trim().parse().map_err(|_| unknown())?;
        let needs_theta = |theta: Option<f64>| {
            theta.ok_or_else(|| {
                Error::InvalidParameter(format!("measure {token:?} requires a threshold, e.g. {family}@{k}:0.5"))
            })
        };
        let forbid_theta = |theta: Option<f64>| match theta {
            Some(_) => Err(Error::InvalidParameter(format!(
                "measure {token:?} does not take a threshold"
            ))),
            None => Ok(()),
        };
        match family.as_str() {
            "recall" | "r" => Self::recall(k, needs_theta(theta)?),
            "ap" => Self::ap(k, needs_theta(theta)?),
            "axiou" => {
                forbid_theta(theta)?;
                Self::axiou(k)
            }
            "dcg" => {
                forbid_theta(theta)?;
                Self::dcg(k)
            }
            _ => Err(unknown()),
        }
    }
}

impl Serialize for MeasureSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MeasureSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Mean of a measure over a query set, with the per-query values retained.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub system_id: String,
    pub measure: MeasureSpec,
    pub mean: f64,
    pub per_query: Vec<(String, f64)>,
}

/// Evaluates `run` on every query of `gt`.
pub fn mean_measure(run: &Run, gt: &GroundTruth, spec: &MeasureSpec) -> Result<Evaluation> {
    let queries: Vec<&str> = gt.query_ids().collect();
    evaluate_on(run, gt, &queries, spec)
}

/// Evaluates `run` on an explicit query set.
pub fn evaluate_on(
    run: &Run,
    gt: &GroundTruth,
    queries: &[&str],
    spec: &MeasureSpec,
) -> Result<Evaluation> {
    if queries.is_empty() {
        return Err(Error::EmptyQuerySet);
    }
    let per_query = queries
        .iter()
        .map(|&q| {
            let target = gt.interval(q)?;
            let list = run.list(q)?;
            Ok((q.to_owned(), spec.score(&relevance_scores(&list.moments, target))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation {
        system_id: run.system_id.clone(),
        measure: spec.clone(),
        mean: mean(per_query.iter().map(|(_, v)| *v)),
        per_query,
    })
}

/// Per-query scores for every (measure, run) pair over a fixed query order.
///
/// Relevance lists are computed once per (run, query) and shared by all
/// measures. `scores[m][s][q]` is measure `m`, system `s`, query `q`.
#[derive(Clone, Debug)]
pub struct ScoreTable {
    pub queries: Vec<String>,
    pub systems: Vec<String>,
    pub measures: Vec<MeasureSpec>,
    pub scores: Vec<Vec<Vec<f64>>>,
}

impl ScoreTable {
    pub fn build(runs: &[Run], gt: &GroundTruth, specs: &[MeasureSpec]) -> Result<Self> {
        let queries: Vec<&str> = gt.query_ids().collect();
        Self::build_on(runs, gt, &queries, specs)
    }

    pub fn build_on(
        runs: &[Run],
        gt: &GroundTruth,
        queries: &[&str],
        specs: &[MeasureSpec],
    ) -> Result<Self> {
        if queries.is_empty() {
            return Err(Error::EmptyQuerySet);
        }
        let relevance: Vec<Vec<Vec<f64>>> = runs
            .par_iter()
            .map(|run| {
                queries
                    .iter()
                    .map(|&q| {
                        let target = gt.interval(q)?;
                        Ok(relevance_scores(&run.list(q)?.moments, target))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let scores = specs
            .iter()
            .map(|spec| {
                relevance
                    .iter()
                    .map(|per_query| per_query.iter().map(|rel| spec.score(rel)).collect())
                    .collect()
            })
            .collect();
        Ok(Self {
            queries: queries.iter().map(|q| (*q).to_owned()).collect(),
            systems: runs.iter().map(|r| r.system_id.clone()).collect(),
            measures: specs.to_vec(),
            scores,
        })
    }

    /// Mean per system for measure `m`, over the query indices in `subset`
    /// (all queries when `None`).
    pub fn system_means(&self, m: usize, subset: Option<&[usize]>) -> Vec<f64> {
        self.scores[m]
            .iter()
            .map(|per_query| match subset {
                Some(idx) => mean(idx.iter().map(|&i| per_query[i])),
                None => mean(per_query.iter().copied()),
            })
            .collect()
    }
}
