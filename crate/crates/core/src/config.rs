//! Pipeline configuration and its `key = value` file format.
//!
//! Blank lines and lines starting with `#` are ignored. Keys:
//!
//! | key | default |
//! |---|---|
//! | `upsample_factor` | 10 |
//! | `upsample_ecg` | true |
//! | `ppg_filter.kind`, `ecg_filter.kind` | `band_pass` (`high_pass`, `notch`) |
//! | `ppg_filter.low_hz`, `ppg_filter.high_hz`, `ppg_filter.order` | 0.5, 20, 4 |
//! | `ecg_filter.low_hz`, `ecg_filter.high_hz`, `ecg_filter.order` | 0.5, 40, 4 |
//! | `eemd.ensemble_size` | 100 |
//! | `eemd.noise_std_ratio` | 0.2 |
//! | `eemd.max_imfs` | 3 |
//! | `eemd.sift_stop_sd`, `eemd.max_sift_iters` | 0.2, 50 |
//! | `eemd.seed` | 0 |
//! | `eemd.decompose_at` | `record` (`upsampled`) |
//! | `forest.n_trees`, `forest.max_depth` | 100, 15 |
//! | `forest.min_samples_leaf`, `forest.mtry` | 2, 2 |
//! | `forest.seed`, `forest.bootstrap` | 0, true |
//! | `split.train_fraction` | 0.5 |
//! | `split.scope` | `per_subject` (`pooled`) |
//! | `model.scope` | `per_subject` (`pooled`) |
//! | `output_dir` | `out` |
//! | `ablation` | false |
//! | `seed` | sets both `eemd.seed` and `forest.seed` |

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::eemd::EemdConfig;
use crate::eval::{ModelScope, SplitProtocol, SplitScope};
use crate::regress::ForestHyperparams;
use crate::signal::{FilterKind, FilterSpec};

/// Sampling grid the PPG is decomposed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EemdRate {
    /// The filtered PPG at the record's own rate.
    Record,
    /// The filtered PPG after Makima upsampling.
    Upsampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub upsample_factor: usize,
    pub upsample_ecg: bool,
    pub ppg_filter: FilterSpec,
    pub ecg_filter: FilterSpec,
    pub eemd: EemdConfig,
    pub eemd_rate: EemdRate,
    pub forest: ForestHyperparams,
    pub split: SplitProtocol,
    pub model_scope: ModelScope,
    pub output_dir: PathBuf,
    pub ablation: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            upsample_factor: 10,
            upsample_ecg: true,
            ppg_filter: FilterSpec::ppg_default(),
            ecg_filter: FilterSpec::ecg_default(),
            eemd: EemdConfig { max_imfs: Some(3), ..Default::default() },
            eemd_rate: EemdRate::Record,
            forest: ForestHyperparams::default(),
            split: SplitProtocol::default(),
            model_scope: ModelScope::PerSubject,
            output_dir: PathBuf::from("out"),
            ablation: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value {value:?} for {key}")]
    InvalidValue { line: usize, key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Defaults overridden by the entries in `text`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            cfg.set(key.trim(), value.trim(), i + 1)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let bad = || ConfigError::InvalidValue { line, key: key.to_string(), value: value.to_string() };
        let num = || value.parse::<f64>().map_err(|_| bad());
        let int = || value.parse::<usize>().map_err(|_| bad());
        let uint = || value.parse::<u64>().map_err(|_| bad());
        let flag = || value.parse::<bool>().map_err(|_| bad());
        let scope = || match value {
            "per_subject" => Ok(true),
            "pooled" => Ok(false),
            _ => Err(bad()),
        };
        let filter_kind = || match value {
            "band_pass" => Ok(FilterKind::BandPass),
            "high_pass" => Ok(FilterKind::HighPass),
            "notch" => Ok(FilterKind::Notch),
            _ => Err(bad()),
        };
        match key {
            "upsample_factor" => self.upsample_factor = int()?,
            "upsample_ecg" => self.upsample_ecg = flag()?,
            "ppg_filter.kind" => self.ppg_filter.kind = filter_kind()?,
            "ppg_filter.low_hz" => self.ppg_filter.low_cut_hz = num()?,
            "ppg_filter.high_hz" => self.ppg_filter.high_cut_hz = num()?,
            "ppg_filter.order" => self.ppg_filter.order = int()?,
            "ecg_filter.kind" => self.ecg_filter.kind = filter_kind()?,
            "ecg_filter.low_hz" => self.ecg_filter.low_cut_hz = num()?,
            "ecg_filter.high_hz" => self.ecg_filter.high_cut_hz = num()?,
            "ecg_filter.order" => self.ecg_filter.order = int()?,
            "eemd.ensemble_size" => self.eemd.ensemble_size = int()?,
            "eemd.noise_std_ratio" => self.eemd.noise_std_ratio = num()?,
            "eemd.max_imfs" => self.eemd.max_imfs = Some(int()?),
            "eemd.sift_stop_sd" => self.eemd.sift_stop_sd = num()?,
            "eemd.max_sift_iters" => self.eemd.max_sift_iters = int()?,
            "eemd.seed" => self.eemd.rng_seed = uint()?,
            "eemd.decompose_at" => {
                self.eemd_rate = match value {
                    "record" => EemdRate::Record,
                    "upsampled" => EemdRate::Upsampled,
                    _ => return Err(bad()),
                }
            }
            "forest.n_trees" => self.forest.n_trees = int()?,
            "forest.max_depth" => self.forest.max_depth = int()?,
            "forest.min_samples_leaf" => self.forest.min_samples_leaf = int()?,
            "forest.mtry" => self.forest.mtry = int()?,
            "forest.seed" => self.forest.rng_seed = uint()?,
            "forest.bootstrap" => self.forest.bootstrap = flag()?,
            "split.train_fraction" => self.split.train_fraction = num()?,
            "split.scope" => {
                self.split.scope = if scope()? { SplitScope::PerSubject } else { SplitScope::Pooled }
            }
            "model.scope" => {
                self.model_scope = if scope()? { ModelScope::PerSubject } else { ModelScope::Pooled }
            }
            "output_dir" => self.output_dir = PathBuf::from(value),
            "ablation" => self.ablation = flag()?,
            "seed" => self.set_seed(uint()?),
            _ => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
        }
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.eemd.rng_seed = seed;
        self.forest.rng_seed = seed;
    }

    /// Checks every sub-configuration. Filter specs are checked against the
    /// record rate at run time.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        if self.upsample_factor < 2 {
            return Err(ConfigError::Invalid("upsample_factor must be at least 2".into()));
        }
        self.eemd.validate().map_err(|e| invalid(&e))?;
        if self.eemd.max_imfs.is_some_and(|m| m < 3) {
            return Err(ConfigError::Invalid("eemd.max_imfs must be at least 3 (V_visco uses IMF2 and IMF3)".into()));
        }
        self.forest.validate().map_err(|e| invalid(&e))?;
        self.split.validate().map_err(|e| invalid(&e))?;
        Ok(())
    }
}
