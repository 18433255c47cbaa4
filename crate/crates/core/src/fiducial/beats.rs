use super::tangent::{max_upstroke, tangent_foot};
use super::{FiducialError, FiducialKind, FiducialPoint};
use crate::signal::Waveform;

/// PPG search window after each R-peak; also the upper PTT gate.
pub const PPG_SEARCH_WINDOW_S: f64 = 0.6;
const HR_RANGE_BPM: (f64, f64) = (30.0, 220.0);

/// Per-beat hemodynamic measures.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatMeasures {
    pub ptt_s: f64,
    pub hr_bpm: f64,
    /// Systolic peak value minus the foot (diastolic minimum) level.
    pub amp: f64,
    pub rr_s: f64,
    pub r_peak: FiducialPoint,
    pub foot: FiducialPoint,
    pub upstroke: FiducialPoint,
    pub systolic_peak: FiducialPoint,
    pub diastolic_min: FiducialPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DropReason {
    Fiducial(FiducialError),
    PttOutOfRange(f64),
    HrOutOfRange(f64),
    NonPositiveAmplitude(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroppedBeat {
    pub r_peak: FiducialPoint,
    pub reason: DropReason,
}

/// Result of pairing R-peaks with PPG pulses. Every R-peak that has a
/// successor ends up in exactly one of `beats` or `dropped`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Segmentation {
    pub beats: Vec<BeatMeasures>,
    pub dropped: Vec<DroppedBeat>,
}

/// Pairs each R-peak with the PPG pulse that follows it.
///
/// Within `(r, r + 0.6 s]` the systolic peak is the window maximum, the
/// maximum upstroke is searched before it, and the diastolic minimum is the
/// lowest sample in `(r, upstroke]`. PTT runs from the R-peak to the tangent
/// foot, HR comes from the interval to the next R-peak.
pub fn segment_beats(r_peaks: &[FiducialPoint], ppg: &Waveform) -> Segmentation {
    let mut out = Segmentation::default();
    for pair in r_peaks.windows(2) {
        let (r, next) = (pair[0], pair[1]);
        match measure_beat(&r, &next, ppg) {
            Ok(beat) => out.beats.push(beat),
            Err(reason) => out.dropped.push(DroppedBeat { r_peak: r, reason }),
        }
    }
    out
}

fn measure_beat(r: &FiducialPoint, next: &FiducialPoint, ppg: &Waveform) -> Result<BeatMeasures, DropReason> {
    let x = ppg.samples();
    let fs = ppg.fs();
    let n = x.len();
    // first sample strictly after the R-peak, last sample within the window
    let lo = (((r.time_s - ppg.t0()) * fs).floor() + 1.0).max(0.0) as usize;
    let hi_f = ((r.time_s + PPG_SEARCH_WINDOW_S - ppg.t0()) * fs).floor();
    let hi = if hi_f < 0.0 { 0 } else { (hi_f as usize).min(n - 1) };
    if lo >= n || hi < lo + 2 {
        return Err(DropReason::Fiducial(FiducialError::WindowTooShort {
            len: (hi + 1).saturating_sub(lo),
        }));
    }

    let peak = argmax(x, lo, hi);
    let upstroke = max_upstroke(ppg, lo, peak + 1).map_err(DropReason::Fiducial)?;
    let dmin = argmin(x, lo, upstroke.index);
    let diastolic_min = point(ppg, dmin, FiducialKind::DiastolicMin);
    let foot = tangent_foot(ppg, &upstroke, &diastolic_min).map_err(DropReason::Fiducial)?;

    let ptt_s = foot.time_s - r.time_s;
    let rr_s = next.time_s - r.time_s;
    let hr_bpm = 60.0 / rr_s;
    let amp = x[peak] - x[dmin];
    check_gates(ptt_s, hr_bpm, amp)?;
    Ok(BeatMeasures {
        ptt_s,
        hr_bpm,
        amp,
        rr_s,
        r_peak: *r,
        foot,
        upstroke,
        systolic_peak: point(ppg, peak, FiducialKind::SystolicPeak),
        diastolic_min,
    })
}

/// Physiological plausibility gates applied to every beat.
fn check_gates(ptt_s: f64, hr_bpm: f64, amp: f64) -> Result<(), DropReason> {
    if !(ptt_s > 0.0 && ptt_s < PPG_SEARCH_WINDOW_S) {
        return Err(DropReason::PttOutOfRange(ptt_s));
    }
    if !(HR_RANGE_BPM.0..=HR_RANGE_BPM.1).contains(&hr_bpm) {
        return Err(DropReason::HrOutOfRange(hr_bpm));
    }
    if !(amp > 0.0) {
        return Err(DropReason::NonPositiveAmplitude(amp));
    }
    Ok(())
}

fn point(w: &Waveform, index: usize, kind: FiducialKind) -> FiducialPoint {
    FiducialPoint {
        index,
        time_s: w.time_of(index),
        kind,
    }
}

fn argmax(x: &[f64], lo: usize, hi: usize) -> usize {
    (lo..=hi).fold(lo, |best, i| if x[i] > x[best] { i } else { best })
}

fn argmin(x: &[f64], lo: usize, hi: usize) -> usize {
    (lo..=hi).fold(lo, |best, i| if x[i] < x[best] { i } else { best })
}
