//! Evaluation measures for video moment retrieval, their axiomatic checks,
//! and the agreement, stability, label-noise and model-selection protocols
//! built on top of them.

pub mod axioms;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod interval;
pub mod io;
pub mod measure;
pub mod metrics;
pub mod rank_stats;
pub mod report;
pub mod seeding;
pub mod synth;
pub mod theory;

pub use dataset::{Annotation, GroundTruth, RankedList, RelevanceList, Run};
pub use error::{Error, Result};
pub use interval::{temporal_iou, Interval};
pub use measure::{Abandonment, Family, MeasureSpec};
