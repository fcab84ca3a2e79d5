use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A temporal segment `[start, end]` on a video timeline, in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInterval")]
pub struct Interval {
    start: f64,
    end: f64,
}

#[derive(Deserialize)]
struct RawInterval {
    start: f64,
    end: f64,
}

impl TryFrom<RawInterval> for Interval {
    type Error = Error;

    fn try_from(raw: RawInterval) -> Result<Self> {
        Interval::new(raw.start, raw.end)
    }
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() || end < start {
            return Err(Error::InvalidInterval {
                query_id: String::new(),
                start,
                end,
            });
        }
        Ok(Self { start, end })
    }

    /// Like [`Interval::new`] but tags a failure with the query it belongs to.
    pub fn for_query(query_id: &str, start: f64, end: f64) -> Result<Self> {
        Self::new(start, end).map_err(|_| Error::InvalidInterval {
            query_id: query_id.to_owned(),
            start,
            end,
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.start + self.end)
    }
}

/// Temporal intersection over union of two intervals.
///
/// Two zero-length intervals have an empty union; their IoU is defined as 0.
pub fn temporal_iou(a: &Interval, b: &Interval) -> f64 {
    let intersection = (a.end.min(b.end) - a.start.max(b.start)).max(0.0);
    let union = a.length() + b.length() - intersection;
    if union <= 0.0 {
        return 0.0;
    }
    (intersection / union).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(s: f64, e: f64) -> Interval {
        Interval::new(s, e).unwrap()
    }

    #[test]
    fn identical_intervals_have_unit_iou() {
        assert_eq!(temporal_iou(&iv(0.0, 2.0), &iv(0.0, 2.0)), 1.0);
    }

    #[test]
    fn disjoint_intervals_have_zero_iou() {
        assert_eq!(temporal_iou(&iv(0.0, 1.0), &iv(2.0, 3.0)), 0.0);
    }

    #[test]
    fn half_overlap() {
        // intersection [1,2] = 1s, union [0,3] = 3s
        let v = temporal_iou(&iv(0.0, 2.0), &iv(1.0, 3.0));
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn touching_intervals_do_not_overlap() {
        assert_eq!(temporal_iou(&iv(0.0, 1.0), &iv(1.0, 2.0)), 0.0);
    }

    #[test]
    fn zero_length_union_is_zero() {
        assert_eq!(temporal_iou(&iv(1.0, 1.0), &iv(1.0, 1.0)), 0.0);
        assert_eq!(temporal_iou(&iv(1.0, 1.0), &iv(0.0, 2.0)), 0.0);
    }

    #[test]
    fn rejects_reversed_and_non_finite() {
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
        match Interval::for_query("q9", 3.0, 1.0) {
            Err(Error::InvalidInterval { query_id, .. }) => assert_eq!(query_id, "q9"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deserialization_validates() {
        assert!(serde_json::from_str::<Interval>(r#"{"start":3,"end":1}"#).is_err());
        let ok: Interval = serde_json::from_str(r#"{"start":1,"end":3}"#).unwrap();
        assert_eq!(ok.length(), 2.0);
    }

    fn interval() -> impl Strategy<Value = Interval> {
        (0.0..100.0f64, 0.0..50.0f64).prop_map(|(s, l)| iv(s, s + l))
    }

    proptest! {
        #[test]
        fn iou_is_symmetric_and_bounded(a in interval(), b in interval()) {
            let ab = temporal_iou(&a, &b);
            let ba = temporal_iou(&b, &a);
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn iou_is_one_only_for_identical_positive_intervals(a in interval(), b in interval()) {
            let v = temporal_iou(&a, &b);
            if v == 1.0 {
                prop_assert!(a.length() > 0.0);
                prop_assert!((a.start() - b.start()).abs() < 1e-9 && (a.end() - b.end()).abs() < 1e-9);
            }
            if a.length() > 0.0 {
                prop_assert_eq!(temporal_iou(&a, &a), 1.0);
            }
        }
    }
}
