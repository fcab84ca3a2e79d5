//! Empirical verification of the INV-k and MON-k axioms.
//!
//! A trial draws a small synthetic run of relevance lists, changes the score
//! of exactly one moment at a rank `k <= K` of one query, and compares the
//! mean measure before and after.
//!
//! * INV-k (non-best moment): the raised score stays at or below the best
//!   score ranked above it, and the mean must not change.
//! * MON-k (best moment): the raised score becomes the best within the top
//!   `k`, and the mean must strictly increase.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::RelevanceList;
use crate::error::{Error, Result};
use crate::measure::{Family, MeasureSpec};
use crate::seeding::{derive_seed, rng_for, Rng};

/// Mean values closer than this are treated as equal for INV-k.
pub const INVARIANCE_TOLERANCE: f64 = 1e-12;

const QUERIES_PER_TRIAL: usize = 8;
const EXTRA_RANKS: usize = 2;
const ATTEMPTS_PER_TRIAL: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PerturbationKind {
    NonBest,
    Best,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axiom {
    #[serde(rename = "INV_K")]
    InvK,
    #[serde(rename = "MON_K")]
    MonK,
}

impl Axiom {
    pub fn perturbation_kind(self) -> PerturbationKind {
        match self {
            Axiom::InvK => PerturbationKind::NonBest,
            Axiom::MonK => PerturbationKind::Best,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axiom::InvK => "INV_K",
            Axiom::MonK => "MON_K",
        }
    }
}

/// A single-moment change to one query's relevance list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub query_id: String,
    /// 1-based rank of the changed moment.
    pub rank: usize,
    pub original: f64,
    pub replacement: f64,
    pub kind: PerturbationKind,
}

fn prefix_max(scores: &[f64], rank: usize) -> Option<f64> {
    scores[..rank - 1].iter().copied().reduce(f64::max)
}

impl Perturbation {
    /// Builds a perturbation and checks it against the conditions of its kind.
    pub fn new(
        rel: &RelevanceList,
        rank: usize,
        replacement: f64,
        kind: PerturbationKind,
    ) -> Result<Self> {
        let scores = rel.scores();
        if rank == 0 || rank > scores.len() {
            return Err(Error::InvalidParameter(format!(
                "rank {rank} outside list of length {}",
                scores.len()
            )));
        }
        let original = scores[rank - 1];
        if !(original < replacement && replacement <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "replacement {replacement} must exceed original {original} and be at most 1"
            )));
        }
        let above = prefix_max(scores, rank);
        let ok = match (kind, above) {
            (PerturbationKind::NonBest, Some(m)) => replacement <= m,
            (PerturbationKind::NonBest, None) => false,
            (PerturbationKind::Best, Some(m)) => replacement > m,
            (PerturbationKind::Best, None) => true,
        };
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "replacement {replacement} at rank {rank} violates the {kind:?} condition"
            )));
        }
        Ok(Self {
            query_id: rel.query_id.clone(),
            rank,
            original,
            replacement,
            kind,
        })
    }

    pub fn apply(&self, scores: &[f64]) -> Vec<f64> {
        let mut out = scores.to_vec();
        out[self.rank - 1] = self.replacement;
        out
    }
}

/// Draws a perturbation of the given kind at any rank of the list.
pub fn generate_perturbation(
    rel: &RelevanceList,
    kind: PerturbationKind,
    seed: u64,
) -> Result<Perturbation> {
    let mut rng = rng_for(seed, &[]);
    generate_perturbation_with(rel, kind, rel.len(), None, &mut rng)
}

/// Draws a perturbation at a rank no deeper than `max_rank`.
///
/// The rank is uniform over the feasible ranks and the replacement uniform
/// over its feasible range `(low, high]`. With `ceiling`, replacements are
/// additionally capped at that value.
pub fn generate_perturbation_with(
    rel: &RelevanceList,
    kind: PerturbationKind,
    max_rank: usize,
    ceiling: Option<f64>,
    rng: &mut Rng,
) -> Result<Perturbation> {
    let scores = rel.scores();
    let cap = ceiling.unwrap_or(1.0).min(1.0);
    let feasible: Vec<(usize, f64, f64)> = (1..=max_rank.min(scores.len()))
        .filter_map(|rank| {
            let r = scores[rank - 1];
            let above = prefix_max(scores, rank);
            let (low, high) = match (kind, above) {
                (PerturbationKind::NonBest, Some(m)) => (r, m.min(cap)),
                (PerturbationKind::NonBest, None) => return None,
                (PerturbationKind::Best, Some(m)) => (r.max(m), cap),
                (PerturbationKind::Best, None) => (r, cap),
            };
            (high > low).then_some((rank, low, high))
        })
        .collect();
    if feasible.is_empty() {
        return Err(Error::Infeasible);
    }
    let (rank, low, high) = feasible[rng.gen_range(0..feasible.len())];
    let u: f64 = rng.gen();
    let mut replacement = high - u * (high - low);
    if replacement <= low {
        replacement = high;
    }
    Perturbation::new(rel, rank, replacement, kind)
}

/// The run pair and values behind the first violation found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: usize,
    pub perturbation: Perturbation,
    pub original_run: Vec<RelevanceList>,
    pub perturbed_run: Vec<RelevanceList>,
    pub original_mean: f64,
    pub perturbed_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomVerdict {
    pub measure: MeasureSpec,
    pub axiom: Axiom,
    pub trials: usize,
    /// Trials for which no feasible perturbation was found.
    pub skipped: usize,
    pub violations: usize,
    pub witness: Option<Witness>,
}

impl AxiomVerdict {
    pub fn satisfied(&self) -> bool {
        self.violations == 0
    }

    pub fn evaluated(&self) -> usize {
        self.trials - self.skipped
    }
}

enum Outcome {
    Skipped,
    Held,
    Violated(Box<Witness>),
}

fn synthetic_run(rng: &mut Rng, list_len: usize) -> Vec<RelevanceList> {
    (0..QUERIES_PER_TRIAL)
        .map(|q| {
            let scores = (0..list_len).map(|_| rng.gen::<f64>()).collect();
            RelevanceList::new(format!("q{q}"), scores).expect("uniform draws lie in [0, 1)")
        })
        .collect()
}

fn mean_over(spec: &MeasureSpec, run: &[RelevanceList]) -> f64 {
    spec.mean_score(run.iter().map(RelevanceList::scores))
}

/// Whether a trial should steer both scores to the non-relevant side of the
/// threshold. Thresholded measures only reveal their MON-k failure when the
/// change does not cross θ, which uniform draws can rarely hit for extreme θ.
fn biased_ceiling(spec: &MeasureSpec, axiom: Axiom, trial: usize) -> Option<f64> {
    match (axiom, spec.family(), spec.threshold()) {
        (Axiom::MonK, Family::Recall | Family::Ap, Some(theta)) if trial.is_multiple_of(2) => Some(theta),
        _ => None,
    }
}

fn run_trial(spec: &MeasureSpec, axiom: Axiom, seed: u64, trial: usize) -> Outcome {
    let mut rng = rng_for(seed, &[trial as u64]);
    let k = spec.cutoff();
    let kind = axiom.perturbation_kind();
    let ceiling = biased_ceiling(spec, axiom, trial);
    for _ in 0..ATTEMPTS_PER_TRIAL {
        let run = synthetic_run(&mut rng, k + EXTRA_RANKS);
        let q = rng.gen_range(0..run.len());
        let perturbation = match generate_perturbation_with(&run[q], kind, k, ceiling, &mut rng) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let mut perturbed = run.clone();
        perturbed[q] = RelevanceList::new(
            run[q].query_id.clone(),
            perturbation.apply(run[q].scores()),
        )
        .expect("replacement lies in [0, 1]");
        let before = mean_over(spec, &run);
        let after = mean_over(spec, &perturbed);
        let violated = match axiom {
            Axiom::InvK => (after - before).abs() > INVARIANCE_TOLERANCE,
            Axiom::MonK => after <= before,
        };
        return if violated {
            Outcome::Violated(Box::new(Witness {
                trial,
                perturbation,
                original_run: run,
                perturbed_run: perturbed,
                original_mean: before,
                perturbed_mean: after,
            }))
        } else {
            Outcome::Held
        };
    }
    Outcome::Skipped
}

/// Runs `trials` independent perturbation trials of `axiom` against `spec`.
pub fn check_axiom(spec: &MeasureSpec, axiom: Axiom, trials: usize, seed: u64) -> Result<AxiomVerdict> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let outcomes: Vec<Outcome> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(spec, axiom, seed, t))
        .collect();
    let mut verdict = AxiomVerdict {
        measure: spec.clone(),
        axiom,
        trials,
        skipped: 0,
        violations: 0,
        witness: None,
    };
    for outcome in outcomes {
        match outcome {
            Outcome::Skipped => verdict.skipped += 1,
            Outcome::Held => {}
            Outcome::Violated(w) => {
                verdict.violations += 1;
                if verdict.witness.is_none() {
                    verdict.witness = Some(*w);
                }
            }
        }
    }
    Ok(verdict)
}

/// Which axioms each measure family is known to satisfy: `(INV-k, MON-k)`.
pub fn expected_satisfaction(family: Family) -> Option<(bool, bool)> {
    match family {
        Family::Recall => Some((true, false)),
        Family::Ap => Some((false, false)),
        Family::Dcg => Some((false, true)),
        Family::Axiou => Some((true, true)),
        Family::Ncxiou => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub expected_satisfied: bool,
    pub verdict: AxiomVerdict,
}

impl MatrixCell {
    pub fn matches_expected(&self) -> bool {
        self.verdict.satisfied() == self.expected_satisfied
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionMatrix {
    pub k: usize,
    pub theta: f64,
    pub trials: usize,
    pub seed: u64,
    pub cells: Vec<MatrixCell>,
}

impl SatisfactionMatrix {
    pub fn cell(&self, family: Family, axiom: Axiom) -> Option<&MatrixCell> {
        self.cells
            .iter()
            .find(|c| c.verdict.measure.family() == family && c.verdict.axiom == axiom)
    }

    pub fn matches_expected(&self) -> bool {
        self.cells.iter().all(MatrixCell::matches_expected)
    }

    /// Cells expected to hold that nevertheless recorded a violation.
    pub fn unexpected_violations(&self) -> impl Iterator<Item = &MatrixCell> {
        self.cells
            .iter()
            .filter(|c| c.expected_satisfied && !c.verdict.satisfied())
    }
}

/// Checks INV-k and MON-k for R@K,θ, AP@K,θ, DCG@K and AxIoU@K.
pub fn satisfaction_matrix(k: usize, theta: f64, trials: usize, seed: u64) -> Result<SatisfactionMatrix> {
    let specs = [
        MeasureSpec::recall(k, theta)?,
        MeasureSpec::ap(k, theta)?,
        MeasureSpec::dcg(k)?,
        MeasureSpec::axiou(k)?,
    ];
    let mut cells = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let (inv, mon) = expected_satisfaction(spec.family()).expect("baseline families");
        for (j, (axiom, expected)) in [(Axiom::InvK, inv), (Axiom::MonK, mon)].into_iter().enumerate() {
            let cell_seed = derive_seed(seed, &[i as u64, j as u64]);
            cells.push(MatrixCell {
                expected_satisfied: expected,
                verdict: check_axiom(spec, axiom, trials, cell_seed)?,
            });
        }
    }
    Ok(SatisfactionMatrix {
        k,
        theta,
        trials,
        seed,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(scores: &[f64]) -> RelevanceList {
        RelevanceList::new("q", scores.to_vec()).unwrap()
    }

    #[test]
    fn non_best_on_two_element_list_uses_rank_two() {
        for seed in 0..50 {
            let p = generate_perturbation(&rel(&[0.9, 0.1]), PerturbationKind::NonBest, seed).unwrap();
            assert_eq!(p.rank, 2);
            assert!(p.replacement > 0.1 && p.replacement <= 0.9);
        }
    }

    #[test]
    fn best_on_single_element_list() {
        for seed in 0..50 {
            let p = generate_perturbation(&rel(&[0.3]), PerturbationKind::Best, seed).unwrap();
            assert_eq!(p.rank, 1);
            assert!(p.replacement > 0.3 && p.replacement <= 1.0);
        }
    }

    #[test]
    fn best_on_flat_list_exceeds_prefix() {
        let r = rel(&[0.2, 0.2, 0.2]);
        let p = Perturbation::new(&r, 3, 0.7, PerturbationKind::Best).unwrap();
        assert_eq!(p.apply(r.scores()), vec![0.2, 0.2, 0.7]);
        assert!(Perturbation::new(&r, 3, 0.2, PerturbationKind::Best).is_err());
        for seed in 0..50 {
            let p = generate_perturbation(&r, PerturbationKind::Best, seed).unwrap();
            assert!(p.replacement > 0.2);
        }
    }

    #[test]
    fn infeasible_cases() {
        assert!(matches!(
            generate_perturbation(&rel(&[0.3]), PerturbationKind::NonBest, 0),
            Err(Error::Infeasible)
        ));
        // already maximal everywhere
        assert!(matches!(
            generate_perturbation(&rel(&[1.0, 1.0]), PerturbationKind::Best, 0),
            Err(Error::Infeasible)
        ));
        // increasing list: no non-best rank can be raised
        assert!(matches!(
            generate_perturbation(&rel(&[0.1, 0.5, 0.9]), PerturbationKind::NonBest, 0),
            Err(Error::Infeasible)
        ));
    }

    #[test]
    fn constructor_enforces_conditions() {
        let r = rel(&[0.5, 0.2]);
        assert!(Perturbation::new(&r, 2, 0.1, PerturbationKind::NonBest).is_err());
        assert!(Perturbation::new(&r, 2, 0.6, PerturbationKind::NonBest).is_err());
        assert!(Perturbation::new(&r, 1, 0.6, PerturbationKind::NonBest).is_err());
        assert!(Perturbation::new(&r, 2, 0.5, PerturbationKind::NonBest).is_ok());
        assert!(Perturbation::new(&r, 2, 0.5, PerturbationKind::Best).is_err());
        assert!(Perturbation::new(&r, 3, 0.9, PerturbationKind::Best).is_err());
    }

    #[test]
    fn zero_trials_rejected() {
        let spec = MeasureSpec::axiou(3).unwrap();
        assert!(check_axiom(&spec, Axiom::InvK, 0, 1).is_err());
    }

    #[test]
    fn axiou_satisfies_both() {
        let spec = MeasureSpec::axiou(5).unwrap();
        for axiom in [Axiom::InvK, Axiom::MonK] {
            let v = check_axiom(&spec, axiom, 1000, 11).unwrap();
            assert_eq!(v.violations, 0, "{axiom:?}");
            assert!(v.witness.is_none());
            assert_eq!(v.skipped, 0);
        }
    }

    #[test]
    fn recall_mon_witness_stays_on_one_side_of_threshold() {
        let spec = MeasureSpec::recall(5, 0.5).unwrap();
        let v = check_axiom(&spec, Axiom::MonK, 1000, 3).unwrap();
        assert!(v.violations > 0);
        let w = v.witness.unwrap();
        let p = &w.perturbation;
        assert_eq!((p.original > 0.5), (p.replacement > 0.5));
        assert_eq!(w.original_mean, w.perturbed_mean);
    }

    #[test]
    fn verdicts_are_deterministic() {
        let spec = MeasureSpec::ap(4, 0.5).unwrap();
        let a = check_axiom(&spec, Axiom::InvK, 300, 99).unwrap();
        let b = check_axiom(&spec, Axiom::InvK, 300, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn k_equal_one_inv_is_vacuous() {
        let m = satisfaction_matrix(1, 0.5, 200, 5).unwrap();
        let cell = m.cell(Family::Recall, Axiom::InvK).unwrap();
        assert_eq!(cell.verdict.skipped, 200);
        assert!(cell.verdict.satisfied());
    }

    #[test]
    fn matrix_pattern_at_k3() {
        let m = satisfaction_matrix(3, 0.3, 2000, 17).unwrap();
        for c in &m.cells {
            assert!(c.matches_expected(), "{} {:?}", c.verdict.measure, c.verdict.axiom);
        }
    }

    fn scores(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0..1.0f64, 1..=len)
    }

    proptest! {
        #[test]
        fn generated_perturbations_satisfy_their_conditions(s in scores(8), seed in any::<u64>(), best in any::<bool>()) {
            let kind = if best { PerturbationKind::Best } else { PerturbationKind::NonBest };
            let r = rel(&s);
            if let Ok(p) = generate_perturbation(&r, kind, seed) {
                prop_assert!(p.original < p.replacement && p.replacement <= 1.0);
                let above = s[..p.rank - 1].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                match kind {
                    PerturbationKind::NonBest => prop_assert!(p.rank > 1 && p.replacement <= above),
                    PerturbationKind::Best => prop_assert!(p.rank == 1 || p.replacement > above),
                }
            }
        }

        #[test]
        fn axiou_mon_gain_is_bounded_below(s in scores(7), seed in any::<u64>(), k in 1usize..8) {
            let r = rel(&s);
            let mut rng = rng_for(seed, &[]);
            if let Ok(p) = generate_perturbation_with(&r, PerturbationKind::Best, k, None, &mut rng) {
                let spec = MeasureSpec::axiou(k).unwrap();
                let before = spec.score(r.scores());
                let after = spec.score(&p.apply(r.scores()));
                let above = s[..p.rank - 1].iter().copied().fold(p.original, f64::max);
                prop_assert!(after - before + 1e-12 >= (p.replacement - above) / k as f64);
                prop_assert!(after > before);
            }
        }
    }
}
