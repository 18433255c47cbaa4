//! Cuffless blood-pressure estimation from synchronised ECG and PPG.
//!
//! The pipeline filters and Makima-upsamples both channels, pairs ECG R-peaks
//! with PPG pulse feet found by the intersecting-tangent method, decomposes
//! the PPG with EEMD to derive a viscoelastic energy feature, and regresses
//! SBP/DBP with a random forest on `[1/PTT, V_visco, HR, Amp]`.

pub mod signal;
pub mod eemd;
pub mod fiducial;
pub mod regress;
pub mod eval;
pub mod synth;
pub mod record;
pub mod config;
pub mod pipeline;
