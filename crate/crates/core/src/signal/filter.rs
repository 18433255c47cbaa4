use std::f64::consts::PI;

use super::{SignalError, Waveform};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    BandPass,
    HighPass,
    Notch,
}

/// Butterworth-family IIR design applied forward and backward.
///
/// `order` is the prototype order of each Butterworth stage: a band-pass of
/// order 4 is a 4th-order high-pass at `low_cut_hz` cascaded with a 4th-order
/// low-pass at `high_cut_hz`. High-pass ignores `high_cut_hz`. A notch places
/// `order / 2` second-order notches at the centre of `[low_cut_hz, high_cut_hz]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub low_cut_hz: f64,
    pub high_cut_hz: f64,
    pub order: usize,
}

impl FilterSpec {
    pub fn band_pass(low_cut_hz: f64, high_cut_hz: f64, order: usize) -> Self {
        FilterSpec {
            kind: FilterKind::BandPass,
            low_cut_hz,
            high_cut_hz,
            order,
        }
    }

    pub fn high_pass(cut_hz: f64, order: usize) -> Self {
        FilterSpec {
            kind: FilterKind::HighPass,
            low_cut_hz: cut_hz,
            high_cut_hz: f64::INFINITY,
            order,
        }
    }

    pub fn notch(low_cut_hz: f64, high_cut_hz: f64, order: usize) -> Self {
        FilterSpec {
            kind: FilterKind::Notch,
            low_cut_hz,
            high_cut_hz,
            order,
        }
    }

    /// PPG default: 0.5-20 Hz, order 4.
    pub fn ppg_default() -> Self {
        Self::band_pass(0.5, 20.0, 4)
    }

    /// ECG default: 0.5-40 Hz, order 4.
    pub fn ecg_default() -> Self {
        Self::band_pass(0.5, 40.0, 4)
    }

    pub fn validate(&self, fs: f64) -> Result<(), SignalError> {
        let invalid = |msg: String| Err(SignalError::InvalidFilterSpec(msg));
        if self.order < 2 || self.order % 2 != 0 {
            return invalid(format!("order must be even and >= 2, got {}", self.order));
        }
        let nyquist = fs / 2.0;
        let lo = self.low_cut_hz;
        let hi = self.high_cut_hz;
        match self.kind {
            FilterKind::HighPass => {
                if !(lo > 0.0 && lo < nyquist) {
                    return invalid(format!("need 0 < cut ({lo}) < fs/2 ({nyquist})"));
                }
            }
            FilterKind::BandPass | FilterKind::Notch => {
                if !(lo > 0.0 && lo < hi && hi < nyquist) {
                    return invalid(format!(
                        "need 0 < low ({lo}) < high ({hi}) < fs/2 ({nyquist})"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Second-order sections realising this spec at rate `fs`.
    pub fn sections(&self, fs: f64) -> Result<Vec<Biquad>, SignalError> {
        self.validate(fs)?;
        let pairs = self.order / 2;
        let mut out = Vec::with_capacity(self.order);
        match self.kind {
            FilterKind::BandPass => {
                for q in butterworth_qs(self.order) {
                    out.push(Biquad::high_pass(self.low_cut_hz, q, fs));
                }
                for q in butterworth_qs(self.order) {
                    out.push(Biquad::low_pass(self.high_cut_hz, q, fs));
                }
            }
            FilterKind::HighPass => {
                for q in butterworth_qs(self.order) {
                    out.push(Biquad::high_pass(self.low_cut_hz, q, fs));
                }
            }
            FilterKind::Notch => {
                let centre = 0.5 * (self.low_cut_hz + self.high_cut_hz);
                let q = centre / (self.high_cut_hz - self.low_cut_hz);
                for _ in 0..pairs {
                    out.push(Biquad::notch(centre, q, fs));
                }
            }
        }
        Ok(out)
    }
}

/// Pole-pair quality factors of an even-order Butterworth prototype.
fn butterworth_qs(order: usize) -> impl Iterator<Item = f64> {
    let n = order as f64;
    (1..=order / 2).map(move |k| 1.0 / (2.0 * ((2 * k - 1) as f64 * PI / (2.0 * n)).sin()))
}

/// Normalised (a0 = 1) second-order section in transposed direct form II.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn from_raw(b: [f64; 3], a0: f64, a1: f64, a2: f64) -> Self {
        Biquad {
            b: [b[0] / a0, b[1] / a0, b[2] / a0],
            a: [a1 / a0, a2 / a0],
        }
    }

    pub fn low_pass(fc: f64, q: f64, fs: f64) -> Self {
        let w0 = 2.0 * PI * fc / fs;
        let (s, c) = w0.sin_cos();
        let alpha = s / (2.0 * q);
        let b1 = 1.0 - c;
        Self::from_raw([b1 / 2.0, b1, b1 / 2.0], 1.0 + alpha, -2.0 * c, 1.0 - alpha)
    }

    pub fn high_pass(fc: f64, q: f64, fs: f64) -> Self {
        let w0 = 2.0 * PI * fc / fs;
        let (s, c) = w0.sin_cos();
        let alpha = s / (2.0 * q);
        let b0 = (1.0 + c) / 2.0;
        Self::from_raw([b0, -(1.0 + c), b0], 1.0 + alpha, -2.0 * c, 1.0 - alpha)
    }

    pub fn notch(fc: f64, q: f64, fs: f64) -> Self {
        let w0 = 2.0 * PI * fc / fs;
        let (s, c) = w0.sin_cos();
        let alpha = s / (2.0 * q);
        Self::from_raw([1.0, -2.0 * c, 1.0], 1.0 + alpha, -2.0 * c, 1.0 - alpha)
    }

    /// Magnitude response at frequency `f`.
    pub fn magnitude(&self, f: f64, fs: f64) -> f64 {
        let w = 2.0 * PI * f / fs;
        // evaluate polynomials in z^-1 = e^{-jw}
        let eval = |c0: f64, c1: f64, c2: f64| {
            let re = c0 + c1 * w.cos() + c2 * (2.0 * w).cos();
            let im = -(c1 * w.sin() + c2 * (2.0 * w).sin());
            (re * re + im * im).sqrt()
        };
        eval(self.b[0], self.b[1], self.b[2]) / eval(1.0, self.a[0], self.a[1])
    }

    /// State `(s1, s2)` and output for a section that has seen constant input `x` forever.
    fn steady_state(&self, x: f64) -> ([f64; 2], f64) {
        let gain = (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1]);
        let y = gain * x;
        let s2 = self.b[2] * x - self.a[1] * y;
        let s1 = self.b[1] * x - self.a[0] * y + s2;
        ([s1, s2], y)
    }

    fn run(&self, data: &mut [f64], mut state: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        for v in data.iter_mut() {
            let x = *v;
            let y = b0 * x + state[0];
            state[0] = b1 * x - a1 * y + state[1];
            state[1] = b2 * x - a2 * y;
            *v = y;
        }
    }
}

fn run_cascade(sections: &[Biquad], data: &mut [f64]) {
    let mut x0 = data[0];
    for section in sections {
        let (state, y0) = section.steady_state(x0);
        section.run(data, state);
        x0 = y0;
    }
}

/// Forward-backward application of `spec`, giving zero net phase.
///
/// Both ends are padded with an odd reflection and every section starts from
/// its steady state for the first padded sample.
pub fn zero_phase_filter(w: &Waveform, spec: &FilterSpec) -> Result<Waveform, SignalError> {
    let sections = spec.sections(w.fs())?;
    let x = w.samples();
    let n = x.len();
    let min_cut = spec.low_cut_hz.min(spec.high_cut_hz);
    let pad = (3 * (2 * sections.len() + 1))
        .max((w.fs() / min_cut).ceil() as usize)
        .min(n - 1);

    let mut buf = Vec::with_capacity(n + 2 * pad);
    buf.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    buf.extend_from_slice(x);
    buf.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    run_cascade(&sections, &mut buf);
    buf.reverse();
    run_cascade(&sections, &mut buf);
    buf.reverse();

    let out = buf[pad..pad + n].to_vec();
    if let Some(i) = out.iter().position(|v| !v.is_finite()) {
        return Err(SignalError::NonFiniteSample(i));
    }
    Ok(w.replace_samples(out, w.fs()))
}
