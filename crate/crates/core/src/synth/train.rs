use std::f64::consts::{PI, SQRT_2};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::kv::{kv_pressure, KelvinVoigtParams};
use super::SynthError;
use crate::signal::{Channel, Waveform};

/// Upstroke duration at visco factor 1; the factor divides it.
pub const UPSTROKE_BASE_S: f64 = 0.12;
/// Fraction of the upstroke duration between onset and tangent foot.
pub const FOOT_FRACTION: f64 = 0.5 - 1.0 / PI;
pub const MIN_SYNTH_FS: f64 = 125.0;

const FIRST_R_S: f64 = 0.5;
const TAIL_S: f64 = 0.8;
const ECG_SPIKE_SD_S: f64 = 0.010;
const ECG_NOISE_SD: f64 = 0.01;
const AMP_JITTER_SD: f64 = 0.05;
const SYSTOLIC_DECAY_S: f64 = 0.10;
const REFLECTED_DELAY_S: f64 = 0.22;
const REFLECTED_WIDTH_S: f64 = 0.07;
const REFLECTED_RATIO: f64 = 0.35;

/// One PPG pulse: half-cosine onset ramp of length `upstroke_s` into a
/// Gaussian systolic decay, plus a reflected Gaussian wave gated by the
/// same ramp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseShape {
    pub onset_s: f64,
    pub upstroke_s: f64,
    pub amp: f64,
}

impl PulseShape {
    fn ramp(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            0.0
        } else if tau < self.upstroke_s {
            0.5 * (1.0 - (PI * tau / self.upstroke_s).cos())
        } else {
            1.0
        }
    }

    /// Unit-amplitude pulse, used as the wall strain.
    pub fn strain(&self, t: f64) -> f64 {
        let tau = t - self.onset_s;
        if tau <= 0.0 {
            return 0.0;
        }
        let primary = if tau < self.upstroke_s {
            self.ramp(tau)
        } else {
            (-(tau - self.upstroke_s).powi(2) / (2.0 * SYSTOLIC_DECAY_S.powi(2))).exp()
        };
        let centre = self.upstroke_s + REFLECTED_DELAY_S;
        let reflected = (-(tau - centre).powi(2) / (2.0 * REFLECTED_WIDTH_S.powi(2))).exp();
        primary + REFLECTED_RATIO * self.ramp(tau) * reflected
    }

    pub fn value(&self, t: f64) -> f64 {
        self.amp * self.strain(t)
    }

    /// Analytic tangent foot of the onset ramp.
    pub fn foot_s(&self) -> f64 {
        self.onset_s + FOOT_FRACTION * self.upstroke_s
    }

    /// RMS of `d strain / dt` over the upstroke, i.e. the viscous stress of a
    /// unit-viscosity Kelvin-Voigt wall. Evaluated numerically on a 20 kHz
    /// grid; analytically `pi / (2 sqrt(2) upstroke_s)` for the bare ramp.
    pub fn viscous_rms(&self) -> f64 {
        let n = ((self.upstroke_s * 20_000.0).ceil() as usize).max(8);
        let grid: Vec<f64> = (0..=n)
            .map(|i| self.onset_s + self.upstroke_s * i as f64 / n as f64)
            .collect();
        let params = KelvinVoigtParams { e: 0.0, eta: 1.0, strain: |t: f64| self.strain(t) };
        let sigma = kv_pressure(&params, &grid).expect("uniform grid");
        (sigma.iter().map(|s| s * s).sum::<f64>() / sigma.len() as f64).sqrt()
    }
}

/// Ground truth for one generated beat.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatTruth {
    pub r_peak_s: f64,
    pub onset_s: f64,
    pub foot_s: f64,
    /// Time of the steepest point of the onset ramp.
    pub upstroke_s: f64,
    pub systolic_peak_s: f64,
    pub ptt_s: f64,
    pub rr_s: f64,
    pub hr_bpm: f64,
    pub amp: f64,
    /// The visco profile value: upstroke duration is `UPSTROKE_BASE_S / visco`.
    pub visco: f64,
    pub upstroke_duration_s: f64,
    /// RMS viscous stress of the beat's strain at unit viscosity.
    pub sigma_visc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthRecord {
    pub ecg: Waveform,
    pub ppg: Waveform,
    pub truth: Vec<BeatTruth>,
}

/// Generates `n_beats` measurable cardiac cycles of synchronised ECG and PPG.
///
/// ECG R-peaks are Gaussian spikes (10 ms SD) starting at 0.5 s and spaced by
/// `60 / hr`. Each PPG pulse's tangent foot lands exactly `ptt` after its
/// R-peak. A closing R-peak and pulse follow the last beat so every beat has
/// an RR interval.
pub fn synth_beat_train(
    n_beats: usize,
    hr_profile: &[f64],
    ptt_profile: &[f64],
    visco_profile: &[f64],
    fs: f64,
    seed: u64,
) -> Result<SynthRecord, SynthError> {
    if n_beats == 0 || [hr_profile.len(), ptt_profile.len(), visco_profile.len()].iter().any(|&l| l != n_beats) {
        return Err(SynthError::ProfileLengthMismatch {
            n_beats,
            hr: hr_profile.len(),
            ptt: ptt_profile.len(),
            visco: visco_profile.len(),
        });
    }
    if !(fs >= MIN_SYNTH_FS && fs.is_finite()) {
        return Err(SynthError::SampleRateTooLow(fs));
    }
    let positive = |p: &[f64]| p.iter().all(|v| *v > 0.0 && v.is_finite());
    if !positive(hr_profile) || !positive(ptt_profile) || !positive(visco_profile) {
        return Err(SynthError::InvalidProfile);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, AMP_JITTER_SD).unwrap();
    let ecg_noise = Normal::new(0.0, ECG_NOISE_SD).unwrap();

    // beat k uses profile entry k; the closing beat repeats the last entry
    let at = |p: &[f64], k: usize| p[k.min(n_beats - 1)];
    let mut r_times = Vec::with_capacity(n_beats + 1);
    let mut t = FIRST_R_S;
    for k in 0..=n_beats {
        r_times.push(t);
        t += 60.0 / at(hr_profile, k);
    }
    let pulses: Vec<PulseShape> = r_times
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let upstroke_s = UPSTROKE_BASE_S / at(visco_profile, k);
            PulseShape {
                onset_s: r + at(ptt_profile, k) - FOOT_FRACTION * upstroke_s,
                upstroke_s,
                amp: (1.0 + jitter.sample(&mut rng)).clamp(0.8, 1.2),
            }
        })
        .collect();

    let end_s = r_times[n_beats] + TAIL_S.max(at(ptt_profile, n_beats) + 0.5);
    let n = (end_s * fs).ceil() as usize;
    let mut ecg = Vec::with_capacity(n);
    let mut ppg = Vec::with_capacity(n);
    let mut first = 0;
    for i in 0..n {
        let t = i as f64 / fs;
        while first + 1 < r_times.len() && r_times[first + 1] < t - 1.5 {
            first += 1;
        }
        let near = first..(first + 4).min(r_times.len());
        let spikes: f64 = near
            .clone()
            .map(|k| (-(t - r_times[k]).powi(2) / (2.0 * ECG_SPIKE_SD_S.powi(2))).exp())
            .sum();
        ecg.push(spikes + ecg_noise.sample(&mut rng));
        ppg.push(near.map(|k| pulses[k].value(t)).sum());
    }

    let truth = (0..n_beats)
        .map(|k| {
            let p = &pulses[k];
            let rr_s = r_times[k + 1] - r_times[k];
            BeatTruth {
                r_peak_s: r_times[k],
                onset_s: p.onset_s,
                foot_s: p.foot_s(),
                upstroke_s: p.onset_s + p.upstroke_s / 2.0,
                systolic_peak_s: p.onset_s + p.upstroke_s,
                ptt_s: ptt_profile[k],
                rr_s,
                hr_bpm: 60.0 / rr_s,
                amp: p.amp,
                visco: visco_profile[k],
                upstroke_duration_s: p.upstroke_s,
                sigma_visc: p.viscous_rms(),
            }
        })
        .collect();

    Ok(SynthRecord {
        ecg: Waveform::new(ecg, fs, Channel::Ecg)?,
        ppg: Waveform::new(ppg, fs, Channel::Ppg)?,
        truth,
    })
}

/// RMS strain rate of the bare half-cosine ramp of duration `upstroke_s`.
pub fn ramp_viscous_rms(upstroke_s: f64) -> f64 {
    PI / (2.0 * SQRT_2 * upstroke_s)
}
