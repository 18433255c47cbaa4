//! Synthetic data: the Kelvin-Voigt stress oracle, parametric ECG/PPG beat
//! trains with full ground truth, and cohorts with a known BP law.

mod cohort;
mod kv;
mod train;

pub use cohort::{synth_cohort, synth_subject, BpLaw, CohortSpec, LinearLaw, SynthSubject};
pub use kv::{kv_pressure, KelvinVoigtParams};
pub use train::{
    ramp_viscous_rms, synth_beat_train, BeatTruth, PulseShape, SynthRecord, FOOT_FRACTION, MIN_SYNTH_FS,
    UPSTROKE_BASE_S,
};

use thiserror::Error;

use crate::signal::SignalError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("time grid is not uniform at sample {index}")]
    NonUniformGrid { index: usize },
    #[error("time grid needs at least 2 points, got {0}")]
    GridTooShort(usize),
    #[error("invalid Kelvin-Voigt parameters: {0}")]
    InvalidParams(String),
    #[error("profiles must all have n_beats = {n_beats} > 0 entries (hr {hr}, ptt {ptt}, visco {visco})")]
    ProfileLengthMismatch { n_beats: usize, hr: usize, ptt: usize, visco: usize },
    #[error("profile values must be positive and finite")]
    InvalidProfile,
    #[error("sampling rate {0} Hz is below 125 Hz")]
    SampleRateTooLow(f64),
    #[error(transparent)]
    Signal(#[from] SignalError),
}
