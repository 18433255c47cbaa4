use super::{FiducialError, FiducialKind, FiducialPoint};
use crate::signal::Waveform;

/// Central first difference `(x[i+1] - x[i-1]) * fs / 2`.
///
/// Panics if `i` has no neighbour on either side.
pub fn central_slope(w: &Waveform, i: usize) -> f64 {
    let x = w.samples();
    assert!(i >= 1 && i + 1 < x.len(), "central slope needs both neighbours of {i}");
    (x[i + 1] - x[i - 1]) * w.fs() / 2.0
}

/// Sample of steepest rise inside the half-open window `start..end`.
///
/// Only interior samples of the window are candidates, so their central
/// difference stays inside it. Ties go to the earliest index.
pub fn max_upstroke(ppg: &Waveform, start: usize, end: usize) -> Result<FiducialPoint, FiducialError> {
    if end > ppg.len() || start > end {
        return Err(FiducialError::WindowOutOfBounds {
            start,
            end,
            len: ppg.len(),
        });
    }
    if end - start < 3 {
        return Err(FiducialError::WindowTooShort { len: end - start });
    }
    let x = ppg.samples();
    let mut best = start + 1;
    let mut best_diff = x[best + 1] - x[best - 1];
    for i in start + 2..end - 1 {
        let d = x[i + 1] - x[i - 1];
        if d > best_diff {
            best = i;
            best_diff = d;
        }
    }
    Ok(FiducialPoint {
        index: best,
        time_s: ppg.time_of(best),
        kind: FiducialKind::MaxUpstroke,
    })
}

/// Time where the tangent through `(t_u, y_u)` with `slope` meets the
/// horizontal line `y = y_min`, checked to lie in `[t_min, t_u]`.
pub fn foot_from_tangent(t_u: f64, y_u: f64, slope: f64, y_min: f64, t_min: f64) -> Result<f64, FiducialError> {
    if !(slope > 0.0 && slope.is_finite()) {
        return Err(FiducialError::NonPositiveSlope(slope));
    }
    let foot = t_u + (y_min - y_u) / slope;
    if !(foot >= t_min && foot <= t_u) {
        return Err(FiducialError::IntersectionOutOfRange {
            foot_s: foot,
            min_s: t_min,
            upstroke_s: t_u,
        });
    }
    Ok(foot)
}

/// Intersecting-tangent pulse foot: the tangent at the maximum-upstroke point
/// crossed with the diastolic-minimum level.
pub fn tangent_foot(
    ppg: &Waveform,
    upstroke: &FiducialPoint,
    diastolic_min: &FiducialPoint,
) -> Result<FiducialPoint, FiducialError> {
    let x = ppg.samples();
    if upstroke.index == 0 || upstroke.index + 1 >= x.len() || diastolic_min.index >= x.len() {
        return Err(FiducialError::WindowOutOfBounds {
            start: diastolic_min.index,
            end: upstroke.index + 1,
            len: x.len(),
        });
    }
    let slope = central_slope(ppg, upstroke.index);
    let foot = foot_from_tangent(
        upstroke.time_s,
        x[upstroke.index],
        slope,
        x[diastolic_min.index],
        diastolic_min.time_s,
    )?;
    Ok(FiducialPoint {
        index: ppg.index_at(foot),
        time_s: foot,
        kind: FiducialKind::PulseFoot,
    })
}
