//! Queries, ground truth, ranked lists and runs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{temporal_iou, Interval};

/// The annotated moment for one query, plus the video duration when known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub interval: Interval,
    pub duration: Option<f64>,
}

/// Mapping from query id to its annotated moment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    entries: BTreeMap<String, Annotation>,
}

impl GroundTruth {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query_id: impl Into<String>, interval: Interval) -> Result<()> {
        self.insert_annotation(
            query_id,
            Annotation {
                interval,
                duration: None,
            },
        )
    }

    pub fn insert_annotation(
        &mut self,
        query_id: impl Into<String>,
        annotation: Annotation,
    ) -> Result<()> {
        let query_id = query_id.into();
        if let Some(d) = annotation.duration {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "duration for query {query_id:?} must be positive, got {d}"
                )));
            }
        }
        if self.entries.contains_key(&query_id) {
            return Err(Error::DuplicateKey(query_id));
        }
        self.entries.insert(query_id, annotation);
        Ok(())
    }

    pub fn get(&self, query_id: &str) -> Option<&Annotation> {
        self.entries.get(query_id)
    }

    pub fn interval(&self, query_id: &str) -> Result<&Interval> {
        self.entries
            .get(query_id)
            .map(|a| &a.interval)
            .ok_or_else(|| Error::MissingAnnotation(query_id.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, query_id: &str) -> bool {
        self.entries.contains_key(query_id)
    }

    /// Query ids in sorted order.
    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Annotation)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// A copy restricted to the given queries. Unknown ids are ignored.
    pub fn restrict<'a>(&self, queries: impl IntoIterator<Item = &'a str>) -> GroundTruth {
        let entries = queries
            .into_iter()
            .filter_map(|q| self.entries.get(q).map(|a| (q.to_owned(), *a)))
            .collect();
        GroundTruth { entries }
    }

    /// Rebuilds every annotation through `f`, keeping query ids and durations.
    pub fn map_intervals<F>(&self, mut f: F) -> Result<GroundTruth>
    where
        F: FnMut(&str, &Annotation) -> Result<Interval>,
    {
        let mut entries = BTreeMap::new();
        for (q, a) in &self.entries {
            let interval = f(q, a)?;
            entries.insert(
                q.clone(),
                Annotation {
                    interval,
                    duration: a.duration,
                },
            );
        }
        Ok(GroundTruth { entries })
    }
}

/// The moments a system returns for one query, best-ranked first.
///
/// Duplicates are allowed: redundant moments are exactly what the measures
/// have to cope with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub moments: Vec<Interval>,
}

impl RankedList {
    pub fn new(query_id: impl Into<String>, moments: Vec<Interval>) -> Self {
        Self {
            query_id: query_id.into(),
            moments,
        }
    }
}

/// One system's ranked lists over a query set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub system_id: String,
    lists: BTreeMap<String, RankedList>,
}

impl Run {
    pub fn new(system_id: impl Into<String>) -> Self {
        Self {
            system_id: system_id.into(),
            lists: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, list: RankedList) -> Result<()> {
        if self.lists.contains_key(&list.query_id) {
            return Err(Error::DuplicateKey(list.query_id));
        }
        self.lists.insert(list.query_id.clone(), list);
        Ok(())
    }

    pub fn get(&self, query_id: &str) -> Option<&RankedList> {
        self.lists.get(query_id)
    }

    pub fn list(&self, query_id: &str) -> Result<&RankedList> {
        self.lists.get(query_id).ok_or_else(|| Error::MissingPrediction {
            system_id: self.system_id.clone(),
            query_id: query_id.to_owned(),
        })
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.lists.keys().map(String::as_str)
    }

    pub fn lists(&self) -> impl Iterator<Item = &RankedList> {
        self.lists.values()
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }
}

/// IoU of each ranked moment against the ground truth, in rank order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelevanceList {
    pub query_id: String,
    scores: Vec<f64>,
}

impl RelevanceList {
    pub fn new(query_id: impl Into<String>, scores: Vec<f64>) -> Result<Self> {
        let query_id = query_id.into();
        if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::InvalidParameter(format!(
                "relevance score {bad} for query {query_id:?} is outside [0, 1]"
            )));
        }
        Ok(Self { query_id, scores })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Scores every moment of `list` by its temporal IoU with the query's annotation.
pub fn relevance_list(list: &RankedList, gt: &GroundTruth) -> Result<RelevanceList> {
    let target = gt.interval(&list.query_id)?;
    Ok(RelevanceList {
        query_id: list.query_id.clone(),
        scores: relevance_scores(&list.moments, target),
    })
}

pub(crate) fn relevance_scores(moments: &[Interval], target: &Interval) -> Vec<f64> {
    moments.iter().map(|m| temporal_iou(m, target)).collect()
}
