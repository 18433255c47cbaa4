//! Chronological splitting, agreement metrics, report validation and the
//! feature ablation harness.

mod ablation;
mod metrics;
mod split;
mod validate;

pub use ablation::{ablation_run, evaluate, fit_and_predict, POOLED_MODEL_KEY, AblationArm, AblationReport, ModelScope, Predictions};
pub use metrics::{compute_metrics, per_subject_mean, EvalReport, AAMI_MAX_BIAS, AAMI_MAX_SD, LOA_Z};
pub use split::{chronological_split, Split, SplitMode, SplitProtocol, SplitScope};
pub use validate::{validate_report, PublishedFigures, ValidationIssue};

use thiserror::Error;

use crate::regress::{FeatureVector, RegressError, Target};

/// One cardiac cycle: its features and the paired reference pressures.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatRecord {
    pub subject: String,
    /// R-peak time within the subject's record, seconds.
    pub beat_time_s: f64,
    pub ptt_s: f64,
    pub features: FeatureVector,
    pub sbp_ref: f64,
    pub dbp_ref: f64,
}

impl BeatRecord {
    pub fn reference(&self, target: Target) -> f64 {
        match target {
            Target::Sbp => self.sbp_ref,
            Target::Dbp => self.dbp_ref,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("subject {0} has fewer than 4 beats")]
    TooFewBeats(String),
    #[error("beats of subject {0} are not in time order")]
    NotChronological(String),
    #[error("invalid split protocol: {0}")]
    InvalidProtocol(String),
    #[error("{est} estimates but {reference} references")]
    LengthMismatch { est: usize, reference: usize },
    #[error("no values to evaluate")]
    Empty,
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("subject {subject}: {source}")]
    Fit { subject: String, source: RegressError },
}
