//! Report containers and their CSV layouts.

use serde::Serialize;

use crate::axioms::SatisfactionMatrix;
use crate::experiments::{NoiseReport, SelectionReport, StabilityReport};
use crate::io::{format_float, format_opt, Tabular};
use crate::measure::{Evaluation, MeasureSpec};
use crate::rank_stats::AgreementMatrix;
use crate::theory::NoiseTheoryPoint;

fn strings<const N: usize>(cols: [&str; N]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

/// Mean scores per (system, measure), in evaluation order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub evaluations: Vec<Evaluation>,
    /// Fraction of ground-truth queries each run answers; filled in when
    /// evaluating on the common subset of partially covered runs.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub coverage: Vec<(String, f64)>,
}

impl Tabular for EvalReport {
    fn header(&self) -> Vec<String> {
        strings(["system_id", "measure", "mean"])
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.evaluations
            .iter()
            .map(|e| vec![e.system_id.clone(), e.measure.to_string(), format_float(e.mean)])
            .collect()
    }
}

/// Long-format per-query scores.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerQueryReport {
    pub rows: Vec<PerQueryRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerQueryRow {
    pub system_id: String,
    pub measure: MeasureSpec,
    pub query_id: String,
    pub score: f64,
}

impl From<&EvalReport> for PerQueryReport {
    fn from(report: &EvalReport) -> Self {
        let rows = report
            .evaluations
            .iter()
            .flat_map(|e| {
                e.per_query.iter().map(|(q, s)| PerQueryRow {
                    system_id: e.system_id.clone(),
                    measure: e.measure.clone(),
                    query_id: q.clone(),
                    score: *s,
                })
            })
            .collect();
        PerQueryReport { rows }
    }
}

impl Tabular for PerQueryReport {
    fn header(&self) -> Vec<String> {
        strings(["system_id", "measure", "query_id", "score"])
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| vec![r.system_id.clone(), r.measure.to_string(), r.query_id.clone(), format_float(r.score)])
            .collect()
    }
}

impl Tabular for SatisfactionMatrix {
    fn header(&self) -> Vec<String> {
        strings([
            "measure",
            "axiom",
            "expected_satisfied",
            "satisfied",
            "trials",
            "skipped",
            "violations",
        ])
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.cells
            .iter()
            .map(|c| {
                let v = &c.verdict;
                vec![
                    v.measure.to_string(),
                    v.axiom.name().to_string(),
                    c.expected_satisfied.to_string(),
                    v.satisfied().to_string(),
                    v.trials.to_string(),
                    v.skipped.to_string(),
                    v.violations.to_string(),
                ]
            })
            .collect()
    }
}

/// Pairwise τ-b between measures plus each measure's all-tied query ratio.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgreementReport {
    pub systems: Vec<String>,
    pub agreement: AgreementMatrix,
    pub all_tied_ratio: Vec<f64>,
}

impl Tabular for AgreementReport {
    fn header(&self) -> Vec<String> {
        let mut h = strings(["measure", "all_tied_ratio"]);
        h.extend(self.agreement.measures.iter().map(|m| m.to_string()));
        h
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.agreement
            .measures
            .iter()
            .zip(&self.agreement.values)
            .zip(&self.all_tied_ratio)
            .map(|((m, taus), ratio)| {
                let mut row = vec![m.to_string(), format_float(*ratio)];
                row.extend(taus.iter().map(|t| format_opt(*t)));
                row
            })
            .collect()
    }
}

impl Tabular for [StabilityReport] {
    fn header(&self) -> Vec<String> {
        strings(["measure", "subset_size", "trials", "undefined", "tau_mean", "tau_variance"])
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.iter()
            .map(|r| {
                vec![
                    r.measure.to_string(),
                    r.subset_size.to_string(),
                    r.trials.to_string(),
                    r.undefined.to_string(),
                    format_opt(r.tau_mean),
                    format_opt(r.tau_variance),
                ]
            })
            .collect()
    }
}

impl Tabular for [NoiseReport] {
    fn header(&self) -> Vec<String> {
        let mut h = strings(["measure", "beta2", "replicas", "mean_rmse", "mean_median_iou"]);
        if let Some(first) = self.first() {
            h.extend(first.rmse_per_system.keys().map(|s| format!("rmse:{s}")));
        }
        h
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.iter()
            .map(|r| {
                let mut row = vec![
                    r.measure.to_string(),
                    format_float(r.beta2),
                    r.replicas.to_string(),
                    format_float(r.mean_rmse),
                    format_float(r.mean_median_iou),
                ];
                row.extend(r.rmse_per_system.values().map(|v| format_float(*v)));
                row
            })
            .collect()
    }
}

impl Tabular for SelectionReport {
    fn header(&self) -> Vec<String> {
        strings([
            "validation_measure",
            "chosen_model",
            "test_measure",
            "test_score",
            "z_score",
            "degenerate",
        ])
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::with_capacity(self.chosen.len() * self.test_specs.len());
        for (v, spec) in self.validation_specs.iter().enumerate() {
            for (t, test) in self.test_specs.iter().enumerate() {
                rows.push(vec![
                    spec.to_string(),
                    self.chosen[v].clone(),
                    test.to_string(),
                    format_float(self.test_scores[v][t]),
                    format_float(self.z_scores[v][t]),
                    self.degenerate[t].to_string(),
                ]);
            }
        }
        rows
    }
}

impl Tabular for [NoiseTheoryPoint] {
    fn header(&self) -> Vec<String> {
        strings(["measure", "r", "theta", "gamma", "bias", "variance", "mse"])
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.iter()
            .map(|p| {
                vec![
                    p.measure.clone(),
                    format_float(p.r),
                    format_opt(p.theta),
                    format_float(p.gamma),
                    format_float(p.bias),
                    format_float(p.variance),
                    format_float(p.mse),
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::theory_sweep;

    #[test]
    fn theory_rows_match_header() {
        let rows = theory_sweep(0.5, &[0.5], &[0.1]).unwrap();
        let table = rows.as_slice();
        assert_eq!(table.rows().len(), 2);
        assert_eq!(table.rows()[0], vec!["recall@1:0.5", "0.5", "0.5", "0.10000000000000001", "-0.5", "0.25", "0.5"]);
        assert_eq!(table.rows()[1][2], "");
        assert!(table.rows().iter().all(|r| r.len() == table.header().len()));
    }

    #[test]
    fn eval_rows_flatten_to_per_query() {
        let e = Evaluation {
            system_id: "s".into(),
            measure: "axiou@1".parse().unwrap(),
            mean: 0.25,
            per_query: vec![("a".into(), 0.5), ("b".into(), 0.0)],
        };
        let report = EvalReport {
            evaluations: vec![e],
            coverage: Vec::new(),
        };
        assert_eq!(report.rows(), vec![vec!["s", "axiou@1", "0.25"]]);
        let pq = PerQueryReport::from(&report);
        assert_eq!(pq.rows().len(), 2);
        assert_eq!(pq.rows()[1], vec!["s", "axiou@1", "b", "0"]);
    }
}
