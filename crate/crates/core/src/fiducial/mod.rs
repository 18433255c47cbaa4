//! Per-beat landmarks: ECG R-peaks, PPG pulse feet by the intersecting
//! tangent method, and the derived PTT / HR / amplitude measures.

mod beats;
mod rpeak;
mod tangent;

pub use beats::{segment_beats, BeatMeasures, DropReason, DroppedBeat, Segmentation, PPG_SEARCH_WINDOW_S};
pub use rpeak::{detect_r_peaks, REFRACTORY_S};
pub use tangent::{central_slope, foot_from_tangent, max_upstroke, tangent_foot};

use thiserror::Error;

use crate::signal::SignalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FiducialKind {
    RPeak,
    PulseFoot,
    SystolicPeak,
    MaxUpstroke,
    DiastolicMin,
}

/// A landmark on a waveform. `time_s` may fall between samples (tangent
/// feet); `index` is then the nearest sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiducialPoint {
    pub index: usize,
    pub time_s: f64,
    pub kind: FiducialKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FiducialError {
    #[error("expected a {expected:?} waveform")]
    WrongChannel { expected: crate::signal::Channel },
    #[error("record lasts {secs:.3} s, need at least {min} s")]
    RecordTooShort { secs: f64, min: f64 },
    #[error("no beats found")]
    NoBeatsFound,
    #[error("search window of {len} samples is too short (need 3)")]
    WindowTooShort { len: usize },
    #[error("search window {start}..{end} exceeds waveform length {len}")]
    WindowOutOfBounds { start: usize, end: usize, len: usize },
    #[error("tangent slope {0} is not positive")]
    NonPositiveSlope(f64),
    #[error("tangent foot at {foot_s:.4} s lies outside [{min_s:.4}, {upstroke_s:.4}]")]
    IntersectionOutOfRange { foot_s: f64, min_s: f64, upstroke_s: f64 },
    #[error(transparent)]
    Signal(#[from] SignalError),
}
