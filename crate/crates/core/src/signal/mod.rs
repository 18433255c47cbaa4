//! Waveform container, zero-phase IIR filtering and Makima upsampling.

mod filter;
mod makima;

pub use filter::{zero_phase_filter, Biquad, FilterKind, FilterSpec};
pub use makima::{makima_upsample, MakimaSpline};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("signal is empty")]
    EmptySignal,
    #[error("signal too short: {len} samples, need at least {min}")]
    SignalTooShort { len: usize, min: usize },
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("sampling rate must be positive and finite, got {0}")]
    NonPositiveRate(f64),
    #[error("invalid filter spec: {0}")]
    InvalidFilterSpec(String),
    #[error("upsampling factor must be at least 2, got {0}")]
    FactorTooSmall(usize),
    #[error("knots must be strictly increasing and finite")]
    InvalidKnots,
}

/// Physiological channel carried by a [`Waveform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Ecg,
    Ppg,
}

/// Uniformly sampled single-channel signal.
///
/// Construction goes through [`Waveform::new`], so every value of this type
/// has a positive rate, at least two samples and no NaN/Inf.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    fs: f64,
    kind: Channel,
    t0: f64,
}

impl Waveform {
    /// Validates raw samples and wraps them, starting at `t0 = 0`.
    pub fn new(samples: Vec<f64>, fs: f64, kind: Channel) -> Result<Self, SignalError> {
        validate_and_load(samples, fs, kind)
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn kind(&self) -> Channel {
        self.kind
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time in seconds of sample `index`.
    pub fn time_of(&self, index: usize) -> f64 {
        self.t0 + index as f64 / self.fs
    }

    /// Time of the last sample.
    pub fn end_time(&self) -> f64 {
        self.time_of(self.samples.len() - 1)
    }

    pub fn duration(&self) -> f64 {
        (self.samples.len() - 1) as f64 / self.fs
    }

    /// Nearest sample index for time `t`, clamped to the valid range.
    pub fn index_at(&self, t: f64) -> usize {
        let raw = ((t - self.t0) * self.fs).round();
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(self.samples.len() - 1)
        }
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Same metadata, new samples. Caller guarantees the samples are finite.
    pub(crate) fn replace_samples(&self, samples: Vec<f64>, fs: f64) -> Waveform {
        debug_assert!(samples.iter().all(|v| v.is_finite()));
        Waveform {
            samples,
            fs,
            kind: self.kind,
            t0: self.t0,
        }
    }
}

/// Builds a [`Waveform`], rejecting empty input, non-positive rates and
/// non-finite samples.
pub fn validate_and_load(samples: Vec<f64>, fs: f64, kind: Channel) -> Result<Waveform, SignalError> {
    if !(fs.is_finite() && fs > 0.0) {
        return Err(SignalError::NonPositiveRate(fs));
    }
    if samples.is_empty() {
        return Err(SignalError::EmptySignal);
    }
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(SignalError::NonFiniteSample(i));
    }
    if samples.len() < 2 {
        return Err(SignalError::SignalTooShort {
            len: samples.len(),
            min: 2,
        });
    }
    Ok(Waveform {
        samples,
        fs,
        kind,
        t0: 0.0,
    })
}
