//! Per-query measures over a relevance list (IoU of each ranked moment).
//!
//! Conventions shared by every measure:
//! - an empty list scores 0;
//! - for lists shorter than `k` the running maximum stays constant past the
//!   end, while AP and DCG give absent ranks zero gain;
//! - thresholded measures use the strict comparison `iou > theta`.

use crate::error::{Error, Result};

pub(crate) fn check_cutoff(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("cutoff K must be at least 1".into()));
    }
    Ok(())
}

pub(crate) fn check_threshold(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "threshold theta must lie in [0, 1], got {theta}"
        )));
    }
    Ok(())
}

fn top_max(rel: &[f64], k: usize) -> Option<f64> {
    rel.iter().take(k).copied().reduce(f64::max)
}

/// R@K,θ: 1 if any of the top-`k` moments has IoU strictly above `theta`.
pub fn recall_at(rel: &[f64], k: usize, theta: f64) -> Result<f64> {
    check_cutoff(k)?;
    check_threshold(theta)?;
    Ok(recall_unchecked(rel, k, theta))
}

pub(crate) fn recall_unchecked(rel: &[f64], k: usize, theta: f64) -> f64 {
    match top_max(rel, k) {
        Some(m) if m > theta => 1.0,
        _ => 0.0,
    }
}

/// AxIoU@K: mean over cutoffs 1..=k of the best IoU seen so far.
pub fn axiou_at(rel: &[f64], k: usize) -> Result<f64> {
    check_cutoff(k)?;
    Ok(axiou_unchecked(rel, k))
}

pub(crate) fn axiou_unchecked(rel: &[f64], k: usize) -> f64 {
    if rel.is_empty() {
        return 0.0;
    }
    let mut running = 0.0f64;
    let mut total = 0.0;
    for i in 0..k {
        if let Some(&r) = rel.get(i) {
            running = running.max(r);
        }
        total += running;
    }
    total / k as f64
}

/// Normalised cumulative max IoU under an arbitrary abandonment distribution.
///
/// `abandonment[i]` is the probability of stopping at rank `i + 1`. With the
/// uniform distribution over `k` ranks this coincides with [`axiou_at`].
pub fn ncxiou(rel: &[f64], abandonment: &[f64]) -> Result<f64> {
    crate::measure::Abandonment::new(abandonment.to_vec())?;
    Ok(ncxiou_unchecked(rel, abandonment))
}

pub(crate) fn ncxiou_unchecked(rel: &[f64], abandonment: &[f64]) -> f64 {
    if rel.is_empty() {
        return 0.0;
    }
    // Uniform weights must reproduce axiou_unchecked bit for bit, so the
    // uniform case sums running maxima first and divides once.
    let k = abandonment.len();
    if abandonment.iter().all(|&w| w == abandonment[0]) && abandonment[0] == 1.0 / k as f64 {
        return axiou_unchecked(rel, k);
    }
    let mut running = 0.0f64;
    let mut total = 0.0;
    for (i, &w) in abandonment.iter().enumerate() {
        if let Some(&r) = rel.get(i) {
            running = running.max(r);
        }
        total += w * running;
    }
    total
}

/// AP@K,θ = (1/K) Σ_k (1/k) Σ_{j≤k} 1{r_j > θ}.
pub fn ap_at(rel: &[f64], k: usize, theta: f64) -> Result<f64> {
    check_cutoff(k)?;
    check_threshold(theta)?;
    Ok(ap_unchecked(rel, k, theta))
}

pub(crate) fn ap_unchecked(rel: &[f64], k: usize, theta: f64) -> f64 {
    let mut hits = 0usize;
    let mut total = 0.0;
    for i in 0..k {
        if rel.get(i).is_some_and(|&r| r > theta) {
            hits += 1;
        }
        total += hits as f64 / (i + 1) as f64;
    }
    total / k as f64
}

pub fn identity_gain(r: f64) -> f64 {
    r
}

pub fn log2_discount(rank: usize) -> f64 {
    ((rank + 1) as f64).log2()
}

/// DCG@K with identity gain and `log2(rank + 1)` discount.
pub fn dcg_at(rel: &[f64], k: usize) -> Result<f64> {
    dcg_at_with(rel, k, identity_gain, log2_discount)
}

/// DCG@K with caller-supplied gain and discount. The gain should be
/// nonnegative and strictly increasing; the discount positive and strictly
/// increasing in the (1-based) rank.
pub fn dcg_at_with<G, D>(rel: &[f64], k: usize, gain: G, discount: D) -> Result<f64>
where
    G: Fn(f64) -> f64,
    D: Fn(usize) -> f64,
{
    check_cutoff(k)?;
    Ok(rel
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &r)| gain(r) / discount(i + 1))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn recall_strict_threshold() {
        assert_eq!(recall_at(&[0.69, 0.71], 1, 0.7).unwrap(), 0.0);
        assert_eq!(recall_at(&[0.69, 0.71], 2, 0.7).unwrap(), 1.0);
        assert_eq!(recall_at(&[0.5], 5, 0.5).unwrap(), 0.0);
        assert_eq!(recall_at(&[], 3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn zero_cutoff_is_rejected() {
        assert!(matches!(recall_at(&[0.5], 0, 0.5), Err(Error::InvalidParameter(_))));
        assert!(matches!(axiou_at(&[0.5], 0), Err(Error::InvalidParameter(_))));
        assert!(matches!(ap_at(&[0.5], 0, 0.5), Err(Error::InvalidParameter(_))));
        assert!(matches!(dcg_at(&[0.5], 0), Err(Error::InvalidParameter(_))));
        assert!(matches!(recall_at(&[0.5], 1, 1.5), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn axiou_running_max() {
        assert!((axiou_at(&[0.2, 0.6, 0.4], 3).unwrap() - 1.4 / 3.0).abs() < EPS);
        assert_eq!(axiou_at(&[1.0], 1).unwrap(), 1.0);
        assert!((axiou_at(&[0.69, 0.71], 2).unwrap() - 0.70).abs() < EPS);
        assert_eq!(axiou_at(&[], 4).unwrap(), 0.0);
    }

    #[test]
    fn axiou_short_list_extends_constantly() {
        // running max: 0.3, 0.5, 0.5, 0.5
        assert!((axiou_at(&[0.3, 0.5], 4).unwrap() - 1.8 / 4.0).abs() < EPS);
    }

    #[test]
    fn ncxiou_cases() {
        let uniform = [1.0 / 3.0; 3];
        assert_eq!(
            ncxiou(&[0.2, 0.6, 0.4], &uniform).unwrap(),
            axiou_at(&[0.2, 0.6, 0.4], 3).unwrap()
        );
        assert_eq!(ncxiou(&[0.3, 0.9], &[1.0, 0.0]).unwrap(), 0.3);
        assert!((ncxiou(&[0.3, 0.9], &[0.25, 0.75]).unwrap() - 0.75).abs() < EPS);
        assert!(ncxiou(&[0.3], &[0.5, 0.6]).is_err());
        assert!(ncxiou(&[0.3], &[1.5, -0.5]).is_err());
    }

    #[test]
    fn ap_cases() {
        assert!((ap_at(&[1.0, 1.0], 2, 0.5).unwrap() - 1.0).abs() < EPS);
        assert_eq!(ap_at(&[0.0, 0.0], 2, 0.5).unwrap(), 0.0);
        let expected = (1.0 + 0.5 + 2.0 / 3.0) / 3.0;
        assert!((ap_at(&[0.8, 0.2, 0.9], 3, 0.5).unwrap() - expected).abs() < EPS);
        assert_eq!(ap_at(&[], 3, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn dcg_cases() {
        assert_eq!(dcg_at(&[1.0], 1).unwrap(), 1.0);
        assert_eq!(dcg_at(&[0.0, 0.0, 0.0], 3).unwrap(), 0.0);
        let expected = 0.5 + 0.5 / 3f64.log2();
        assert!((dcg_at(&[0.5, 0.5], 2).unwrap() - expected).abs() < EPS);
        assert!((expected - 0.8154648767857287).abs() < 1e-15);
        let custom = dcg_at_with(&[0.5, 0.5], 2, |r| r * r, |k| k as f64).unwrap();
        assert!((custom - (0.25 + 0.125)).abs() < EPS);
    }

    fn rel_list(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0..=1.0f64, 0..max_len)
    }

    proptest! {
        #[test]
        fn axiou_bounded_by_top_max(rel in rel_list(12), k in 1usize..10) {
            let v = axiou_at(&rel, k).unwrap();
            let m = top_max(&rel, k).unwrap_or(0.0);
            prop_assert!(v <= m + EPS);
            prop_assert!(v + EPS >= m / k as f64);
        }

        #[test]
        fn axiou_nondecreasing_under_single_raise(
            rel in prop::collection::vec(0.0..=1.0f64, 1..10),
            k in 1usize..10,
            idx in 0usize..10,
            bump in 0.0..=1.0f64,
        ) {
            let i = idx % rel.len();
            let mut raised = rel.clone();
            raised[i] = rel[i] + (1.0 - rel[i]) * bump;
            prop_assert!(axiou_at(&raised, k).unwrap() + EPS >= axiou_at(&rel, k).unwrap());
        }

        #[test]
        fn measures_depend_only_on_prefix(
            rel in rel_list(12),
            tail in rel_list(5),
            k in 1usize..12,
            theta in 0.0..=1.0f64,
        ) {
            let prefix: Vec<f64> = rel.iter().take(k).copied().collect();
            if prefix.len() == k {
                let mut extended = prefix.clone();
                extended.extend(tail);
                prop_assert_eq!(recall_at(&prefix, k, theta).unwrap(), recall_at(&extended, k, theta).unwrap());
                prop_assert_eq!(axiou_at(&prefix, k).unwrap(), axiou_at(&extended, k).unwrap());
                prop_assert_eq!(ap_at(&prefix, k, theta).unwrap(), ap_at(&extended, k, theta).unwrap());
            }
        }

        #[test]
        fn uniform_ncxiou_equals_axiou(rel in rel_list(12), k in 1usize..12) {
            let w = vec![1.0 / k as f64; k];
            prop_assert_eq!(ncxiou(&rel, &w).unwrap(), axiou_at(&rel, k).unwrap());
        }
    }
}
