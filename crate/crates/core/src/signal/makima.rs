use super::{SignalError, Waveform};

/// Modified Akima piecewise-cubic interpolant.
///
/// Knot slopes are weighted averages of neighbouring secants with weights
/// `|δ[i+1] - δ[i]| + |δ[i+1] + δ[i]| / 2`. Two ghost secants are extrapolated
/// linearly at each end. When both weights vanish the slope is the mean of
/// the two adjacent secants.
#[derive(Debug, Clone)]
pub struct MakimaSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl MakimaSpline {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self, SignalError> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(SignalError::SignalTooShort {
                len: x.len().min(y.len()),
                min: 2,
            });
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) || x.windows(2).any(|p| p[1] <= p[0]) {
            return Err(SignalError::InvalidKnots);
        }
        let secants: Vec<f64> = x
            .windows(2)
            .zip(y.windows(2))
            .map(|(xs, ys)| (ys[1] - ys[0]) / (xs[1] - xs[0]))
            .collect();
        let slopes = knot_slopes(&secants);
        Ok(MakimaSpline {
            x: x.to_vec(),
            y: y.to_vec(),
            slopes,
        })
    }

    /// Knot derivatives.
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Evaluates the interpolant; queries outside the knot range extrapolate
    /// the end cubic.
    pub fn eval(&self, xq: f64) -> f64 {
        let n = self.x.len();
        let i = self.x.partition_point(|&k| k <= xq).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        hermite(
            self.y[i],
            self.y[i + 1],
            self.slopes[i] * h,
            self.slopes[i + 1] * h,
            (xq - self.x[i]) / h,
        )
    }
}

/// Slopes for unit-spaced or general knots given the secant sequence.
fn knot_slopes(secants: &[f64]) -> Vec<f64> {
    let m = secants.len();
    let n = m + 1;
    // ext[j + 2] == secant j, for j in -2..=m+1
    let mut ext = Vec::with_capacity(m + 4);
    if m == 1 {
        ext.extend([secants[0]; 5]);
    } else {
        let lm1 = 2.0 * secants[0] - secants[1];
        let lm2 = 2.0 * lm1 - secants[0];
        let rp0 = 2.0 * secants[m - 1] - secants[m - 2];
        let rp1 = 2.0 * rp0 - secants[m - 1];
        ext.push(lm2);
        ext.push(lm1);
        ext.extend_from_slice(secants);
        ext.push(rp0);
        ext.push(rp1);
    }
    (0..n)
        .map(|i| {
            let (dm2, dm1, d0, dp1) = (ext[i], ext[i + 1], ext[i + 2], ext[i + 3]);
            let w1 = (dp1 - d0).abs() + (dp1 + d0).abs() / 2.0;
            let w2 = (dm1 - dm2).abs() + (dm1 + dm2).abs() / 2.0;
            let total = w1 + w2;
            if total == 0.0 {
                0.5 * (dm1 + d0)
            } else {
                (w1 * dm1 + w2 * d0) / total
            }
        })
        .collect()
}

#[inline]
fn hermite(y0: f64, y1: f64, m0: f64, m1: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * m0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * m1
}

/// Upsamples by an integer `factor` with Makima interpolation.
///
/// Output has `(len - 1) * factor + 1` samples at `fs * factor`; every
/// `factor`-th output sample is the corresponding input sample, copied.
pub fn makima_upsample(w: &Waveform, factor: usize) -> Result<Waveform, SignalError> {
    if factor < 2 {
        return Err(SignalError::FactorTooSmall(factor));
    }
    let y = w.samples();
    let n = y.len();
    if n < 4 {
        return Err(SignalError::SignalTooShort { len: n, min: 4 });
    }
    let secants: Vec<f64> = y.windows(2).map(|p| p[1] - p[0]).collect();
    let slopes = knot_slopes(&secants);
    let step = 1.0 / factor as f64;

    let mut out = Vec::with_capacity((n - 1) * factor + 1);
    for i in 0..n - 1 {
        out.push(y[i]);
        for j in 1..factor {
            out.push(hermite(y[i], y[i + 1], slopes[i], slopes[i + 1], j as f64 * step));
        }
    }
    out.push(y[n - 1]);
    Ok(w.replace_samples(out, w.fs() * factor as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Channel;
    use proptest::prelude::*;

    fn wave(v: &[f64]) -> Waveform {
        Waveform::new(v.to_vec(), 125.0, Channel::Ppg).unwrap()
    }

    #[test]
    fn reproduces_linear_data() {
        let up = makima_upsample(&wave(&[0.0, 1.0, 2.0, 3.0, 4.0]), 10).unwrap();
        assert_eq!(up.len(), 41);
        assert_eq!(up.fs(), 1250.0);
        for (k, v) in up.samples().iter().enumerate() {
            assert!((v - k as f64 / 10.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn step_data_does_not_overshoot() {
        let up = makima_upsample(&wave(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]), 10).unwrap();
        assert!(up.samples().iter().all(|&v| (-0.01..=1.01).contains(&v)));
        // flat segments stay flat
        assert!(up.samples()[..=20].iter().all(|&v| v == 0.0));
        assert!(up.samples()[30..].iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn matches_frozen_scipy_makima() {
        let x = [0.0, 0.7, 1.5, 2.0, 3.1, 4.0, 4.4, 5.5, 6.0, 7.2];
        let y = [1.0, 1.8, 0.4, 0.4, 0.4, 2.5, 3.0, -1.0, 0.2, 0.9];
        // scipy.interpolate.Akima1DInterpolator(method="makima")
        let expected = [
            (0.0, 1.0),
            (0.35, 1.641087899229075),
            (1.1, 1.018667400881057),
            (1.75, 0.4),
            (2.5, 0.4),
            (3.05, 0.4),
            (3.5, 1.0843596990954312),
            (4.2, 2.858085393786949),
            (5.0, 0.6596573764099445),
            (5.75, -0.4470557171971171),
            (6.6, 0.7404097138489363),
            (7.2, 0.9000000000000001),
        ];
        let s = MakimaSpline::new(&x, &y).unwrap();
        for (q, e) in expected {
            assert!((s.eval(q) - e).abs() < 1e-12, "at {q}: {} vs {e}", s.eval(q));
        }
    }

    #[test]
    fn rejects_short_or_bad_factor() {
        assert_eq!(
            makima_upsample(&wave(&[0.0, 1.0, 2.0]), 10).unwrap_err(),
            SignalError::SignalTooShort { len: 3, min: 4 }
        );
        assert_eq!(
            makima_upsample(&wave(&[0.0, 1.0, 2.0, 3.0]), 1).unwrap_err(),
            SignalError::FactorTooSmall(1)
        );
        assert_eq!(
            MakimaSpline::new(&[0.0, 0.0, 1.0], &[1.0, 2.0, 3.0]).unwrap_err(),
            SignalError::InvalidKnots
        );
    }

    proptest! {
        #[test]
        fn knots_are_copied_and_lengths_follow(
            data in prop::collection::vec(-1e3f64..1e3, 4..64),
            factor in 2usize..16,
        ) {
            let w = wave(&data);
            let up = makima_upsample(&w, factor).unwrap();
            prop_assert_eq!(up.len(), (data.len() - 1) * factor + 1);
            prop_assert_eq!(up.fs(), 125.0 * factor as f64);
            for (i, v) in data.iter().enumerate() {
                prop_assert_eq!(up.samples()[i * factor].to_bits(), v.to_bits());
            }
        }

        #[test]
        fn three_equal_samples_give_flat_intervals(
            mut data in prop::collection::vec(-10f64..10.0, 6..20),
            at in 0usize..100,
            level in -5f64..5.0,
        ) {
            let start = at % (data.len() - 2);
            for v in &mut data[start..start + 3] {
                *v = level;
            }
            let up = makima_upsample(&wave(&data), 10).unwrap();
            // all three knots get zero slope, so both spanned intervals are flat
            for v in &up.samples()[start * 10..=(start + 2) * 10] {
                prop_assert!((v - level).abs() <= 1e-12 * level.abs().max(1.0));
            }
        }
    }
}
