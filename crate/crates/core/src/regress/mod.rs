//! CART regression trees and a bagged random forest over the per-beat
//! feature vector `[1/PTT, V_visco, HR, Amp]`.

mod forest;
mod io;
mod tree;

pub use forest::{feature_importance, fit_forest, fit_forest_on, predict, ForestHyperparams, ForestModel};
pub use io::{decode_model, encode_model, load_model, save_model, ModelIoError, MODEL_FORMAT_VERSION};
pub use tree::{Node, Tree};

use thiserror::Error;

pub const N_FEATURES: usize = 4;

/// Admissible reference range for training targets, mmHg.
pub const TARGET_RANGE_MMHG: (f64, f64) = (30.0, 250.0);

pub const FEATURE_NAMES: [&str; N_FEATURES] = ["inv_ptt", "v_visco", "hr", "amp"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    /// 1/PTT in 1/s.
    pub inv_ptt: f64,
    pub v_visco: f64,
    /// Heart rate in bpm.
    pub hr: f64,
    pub amp: f64,
}

impl FeatureVector {
    pub fn as_array(&self) -> [f64; N_FEATURES] {
        [self.inv_ptt, self.v_visco, self.hr, self.amp]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Sbp,
    Dbp,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Sbp => "sbp",
            Target::Dbp => "dbp",
        }
    }
}

/// Which features a forest may split on, as a bit mask over
/// [`FEATURE_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureSet(u8);

impl FeatureSet {
    /// Elastic features only: 1/PTT, HR, Amp.
    pub const BASELINE: FeatureSet = FeatureSet(0b1101);
    /// All four features.
    pub const PROPOSED: FeatureSet = FeatureSet(0b1111);

    pub fn from_bits(bits: u8) -> Option<FeatureSet> {
        (bits != 0 && bits < 1 << N_FEATURES).then_some(FeatureSet(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, feature: usize) -> bool {
        feature < N_FEATURES && self.0 & (1 << feature) != 0
    }

    pub fn indices(self) -> Vec<usize> {
        (0..N_FEATURES).filter(|&f| self.contains(f)).collect()
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegressError {
    #[error("need at least {min} samples, got {n}")]
    TooFewSamples { n: usize, min: usize },
    #[error("target {value} at row {index} is outside [30, 250] mmHg")]
    TargetOutOfRange { index: usize, value: f64 },
    #[error("{features} feature rows but {targets} targets")]
    LengthMismatch { features: usize, targets: usize },
    #[error("non-finite feature in row {0}")]
    NonFiniteFeature(usize),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
}
