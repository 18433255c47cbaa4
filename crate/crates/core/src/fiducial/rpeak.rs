use super::{FiducialError, FiducialKind, FiducialPoint};
use crate::signal::{zero_phase_filter, Channel, FilterSpec, Waveform};

/// Minimum spacing between accepted R-peaks (220 bpm).
pub const REFRACTORY_S: f64 = 0.27;

const MIN_RECORD_S: f64 = 2.0;
const INTEGRATION_S: f64 = 0.150;
const LEARNING_S: f64 = 2.0;
const REFINE_S: f64 = 0.075;
const LOCAL_MAX_S: f64 = 0.050;

/// Pan-Tompkins style QRS detector.
///
/// Band-pass 5-15 Hz, five-point derivative, squaring and a centred 150 ms
/// moving integration produce a feature signal whose peaks are classified by
/// adaptive signal/noise levels with search-back for missed beats. Each
/// detection is then moved to the ECG maximum nearby, so every returned
/// index is the largest ECG sample within +-50 ms.
pub fn detect_r_peaks(ecg: &Waveform) -> Result<Vec<FiducialPoint>, FiducialError> {
    if ecg.kind() != Channel::Ecg {
        return Err(FiducialError::WrongChannel { expected: Channel::Ecg });
    }
    if ecg.duration() < MIN_RECORD_S {
        return Err(FiducialError::RecordTooShort {
            secs: ecg.duration(),
            min: MIN_RECORD_S,
        });
    }
    let fs = ecg.fs();
    let feature = integrated_energy(ecg)?;
    let peak_max = feature.iter().cloned().fold(0.0, f64::max);
    if !(peak_max > 0.0) {
        return Err(FiducialError::NoBeatsFound);
    }

    // boundary samples count too, so a beat cut by the record edge is kept
    let last = feature.len() - 1;
    let candidates: Vec<usize> = (0..=last)
        .filter(|&i| (i == 0 || feature[i] > feature[i - 1]) && (i == last || feature[i] >= feature[i + 1]))
        .collect();
    let qrs = classify(&feature, &candidates, fs);

    let x = ecg.samples();
    let refine = (REFINE_S * fs).round() as usize;
    let local = (LOCAL_MAX_S * fs).round().max(1.0) as usize;
    let refractory = (REFRACTORY_S * fs).ceil() as usize;
    let mut peaks: Vec<usize> = Vec::with_capacity(qrs.len());
    for q in qrs {
        let mut i = argmax(x, q.saturating_sub(refine), (q + refine).min(x.len() - 1));
        loop {
            let j = argmax(x, i.saturating_sub(local), (i + local).min(x.len() - 1));
            if x[j] <= x[i] {
                break;
            }
            i = j;
        }
        match peaks.last() {
            Some(&last) if i <= last || i - last < refractory => {
                if x[i] > x[last] {
                    *peaks.last_mut().unwrap() = i;
                }
            }
            _ => peaks.push(i),
        }
    }
    if peaks.is_empty() {
        return Err(FiducialError::NoBeatsFound);
    }
    Ok(peaks
        .into_iter()
        .map(|i| FiducialPoint {
            index: i,
            time_s: ecg.time_of(i),
            kind: FiducialKind::RPeak,
        })
        .collect())
}

fn integrated_energy(ecg: &Waveform) -> Result<Vec<f64>, FiducialError> {
    let fs = ecg.fs();
    let band = zero_phase_filter(ecg, &FilterSpec::band_pass(5.0, 15.0, 2))?;
    let b = band.samples();
    let n = b.len();
    let at = |i: isize| b[i.clamp(0, n as isize - 1) as usize];
    let squared: Vec<f64> = (0..n as isize)
        .map(|i| {
            let d = (2.0 * at(i + 1) + at(i + 2) - 2.0 * at(i - 1) - at(i - 2)) * fs / 8.0;
            d * d
        })
        .collect();

    let half = ((INTEGRATION_S * fs / 2.0).round() as usize).max(1);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in &squared {
        prefix.push(prefix.last().unwrap() + v);
    }
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect())
}

/// Adaptive-threshold classification of feature-signal peaks.
fn classify(feature: &[f64], candidates: &[usize], fs: f64) -> Vec<usize> {
    let learn_end = ((LEARNING_S * fs) as usize).min(feature.len());
    let learn = &feature[..learn_end];
    let mut spk = 0.25 * learn.iter().cloned().fold(0.0, f64::max);
    let mut npk = 0.5 * learn.iter().sum::<f64>() / learn.len() as f64;
    let threshold = |spk: f64, npk: f64| npk + 0.25 * (spk - npk);
    let refractory = (REFRACTORY_S * fs).ceil() as usize;

    let mut qrs: Vec<usize> = Vec::new();
    let mut since_last: Vec<usize> = Vec::new();
    for &c in candidates {
        let v = feature[c];
        let thr = threshold(spk, npk);

        if let (Some(&last), Some(rr)) = (qrs.last(), mean_rr(&qrs)) {
            if (c - last) as f64 > 1.66 * rr {
                let missed = since_last
                    .iter()
                    .filter(|&&s| s - last >= refractory && c - s >= refractory && feature[s] > 0.5 * thr)
                    .max_by(|a, b| feature[**a].total_cmp(&feature[**b]));
                if let Some(&m) = missed {
                    spk = 0.25 * feature[m] + 0.75 * spk;
                    qrs.push(m);
                    since_last.clear();
                }
            }
        }

        let thr = threshold(spk, npk);
        if v > thr {
            match qrs.last() {
                Some(&last) if c - last < refractory => {
                    if v > feature[last] {
                        *qrs.last_mut().unwrap() = c;
                    }
                }
                _ => {
                    qrs.push(c);
                    since_last.clear();
                }
            }
            spk = 0.125 * v + 0.875 * spk;
        } else {
            npk = 0.125 * v + 0.875 * npk;
            since_last.push(c);
        }
    }
    qrs
}

fn mean_rr(qrs: &[usize]) -> Option<f64> {
    if qrs.len() < 2 {
        return None;
    }
    let tail = &qrs[qrs.len().saturating_sub(9)..];
    Some((tail[tail.len() - 1] - tail[0]) as f64 / (tail.len() - 1) as f64)
}

fn argmax(x: &[f64], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    for i in lo + 1..=hi {
        if x[i] > x[best] {
            best = i;
        }
    }
    best
}
