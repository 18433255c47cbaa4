//! Empirical mode decomposition, its noise-assisted ensemble variant and the
//! viscoelastic velocity metric computed from the second and third IMFs.

mod ensemble;
mod sift;
mod spline;
mod visco;

pub use ensemble::eemd_decompose;
pub(crate) use ensemble::eemd_with_rate;
pub use sift::emd;
pub use visco::{v_visco, v_visco_of_component, VISCO_ENERGY_FLOOR};

use thiserror::Error;

/// Shortest signal accepted by [`emd`] / [`eemd_decompose`].
pub const MIN_SIGNAL_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EemdError {
    #[error("signal too short: {len} samples, need at least {min}")]
    SignalTooShort { len: usize, min: usize },
    #[error("signal contains non-finite values")]
    NonFinite,
    #[error("invalid EEMD config: {0}")]
    InvalidConfig(String),
    #[error("decomposition has {found} IMFs, need at least 3")]
    NotEnoughImfs { found: usize },
    #[error("cycle window of {len} samples is too short")]
    WindowTooShort { len: usize },
    #[error("window {start}..{end} exceeds signal length {len}")]
    WindowOutOfBounds { start: usize, end: usize, len: usize },
    #[error("IMF lengths do not match the source length")]
    LengthMismatch,
}

/// Ordered intrinsic mode functions (highest frequency first) plus residual.
#[derive(Debug, Clone, PartialEq)]
pub struct ImfSet {
    pub imfs: Vec<Vec<f64>>,
    pub residual: Vec<f64>,
    pub fs: f64,
    pub source_len: usize,
}

impl ImfSet {
    pub fn new(imfs: Vec<Vec<f64>>, residual: Vec<f64>, fs: f64) -> Result<Self, EemdError> {
        let source_len = residual.len();
        if imfs.iter().any(|imf| imf.len() != source_len) {
            return Err(EemdError::LengthMismatch);
        }
        Ok(ImfSet {
            imfs,
            residual,
            fs,
            source_len,
        })
    }

    pub fn len(&self) -> usize {
        self.imfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.imfs.is_empty()
    }

    /// `sum(imfs) + residual`, sample by sample.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = self.residual.clone();
        for imf in &self.imfs {
            for (o, v) in out.iter_mut().zip(imf) {
                *o += v;
            }
        }
        out
    }

    /// Mean zero-crossing frequency of each IMF in Hz (half the crossing
    /// rate). Used to check which band IMF2/IMF3 land in for a record.
    pub fn mean_frequencies(&self) -> Vec<f64> {
        self.imfs
            .iter()
            .map(|imf| {
                let crossings = imf
                    .windows(2)
                    .filter(|p| (p[0] < 0.0 && p[1] >= 0.0) || (p[0] >= 0.0 && p[1] < 0.0))
                    .count();
                let secs = (imf.len().max(2) - 1) as f64 / self.fs;
                crossings as f64 / (2.0 * secs)
            })
            .collect()
    }
}

/// EEMD / EMD parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EemdConfig {
    pub ensemble_size: usize,
    /// Noise standard deviation as a fraction of the signal's.
    pub noise_std_ratio: f64,
    /// `None` means `ceil(log2(len))`.
    pub max_imfs: Option<usize>,
    pub sift_stop_sd: f64,
    pub max_sift_iters: usize,
    pub rng_seed: u64,
}

impl Default for EemdConfig {
    fn default() -> Self {
        EemdConfig {
            ensemble_size: 100,
            noise_std_ratio: 0.2,
            max_imfs: None,
            sift_stop_sd: 0.2,
            max_sift_iters: 50,
            rng_seed: 0,
        }
    }
}

impl EemdConfig {
    pub fn validate(&self) -> Result<(), EemdError> {
        let bad = |m: &str| Err(EemdError::InvalidConfig(m.to_string()));
        if self.ensemble_size < 1 {
            return bad("ensemble_size must be >= 1");
        }
        if !(self.noise_std_ratio >= 0.0 && self.noise_std_ratio.is_finite()) {
            return bad("noise_std_ratio must be finite and >= 0");
        }
        if !(self.sift_stop_sd > 0.0 && self.sift_stop_sd < 1.0) {
            return bad("sift_stop_sd must lie in (0, 1)");
        }
        if self.max_sift_iters < 1 {
            return bad("max_sift_iters must be >= 1");
        }
        if self.max_imfs == Some(0) {
            return bad("max_imfs must be >= 1");
        }
        Ok(())
    }

    pub(crate) fn imf_limit(&self, len: usize) -> usize {
        self.max_imfs
            .unwrap_or_else(|| (len as f64).log2().ceil() as usize)
    }
}
