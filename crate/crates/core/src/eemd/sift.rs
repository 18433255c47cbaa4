use super::spline::{natural_spline_on_grid, SplineScratch};
use super::{EemdConfig, EemdError, ImfSet, MIN_SIGNAL_LEN};

/// Indices of local maxima and minima. A flat run bordered by a rise and a
/// fall (or vice versa) counts once, at its centre.
pub(crate) fn find_extrema(x: &[f64], maxima: &mut Vec<usize>, minima: &mut Vec<usize>) {
    maxima.clear();
    minima.clear();
    let n = x.len();
    let mut i = 1;
    while i + 1 < n {
        let prev = x[i - 1];
        if x[i] == prev {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < n && x[j + 1] == x[i] {
            j += 1;
        }
        if j + 1 < n {
            let rising = x[i] > prev;
            let falling_after = x[j + 1] < x[j];
            if rising && falling_after {
                maxima.push((i + j) / 2);
            } else if !rising && !falling_after {
                minima.push((i + j) / 2);
            }
        }
        i = j + 1;
    }
}

/// Builds an envelope through `idx` with the two extrema nearest each end
/// mirrored about the first and last sample.
fn envelope(
    x: &[f64],
    idx: &[usize],
    knots_x: &mut Vec<f64>,
    knots_y: &mut Vec<f64>,
    scratch: &mut SplineScratch,
    out: &mut [f64],
) {
    let last = (x.len() - 1) as f64;
    knots_x.clear();
    knots_y.clear();
    for &p in idx.iter().take(2).rev() {
        if p > 0 {
            knots_x.push(-(p as f64));
            knots_y.push(x[p]);
        }
    }
    for &p in idx {
        knots_x.push(p as f64);
        knots_y.push(x[p]);
    }
    for &p in idx.iter().rev().take(2) {
        let m = 2.0 * last - p as f64;
        if m > last {
            knots_x.push(m);
            knots_y.push(x[p]);
        }
    }
    natural_spline_on_grid(knots_x, knots_y, scratch, out);
}

/// Buffers shared by every sifting pass of one decomposition.
#[derive(Default)]
struct Sifter {
    maxima: Vec<usize>,
    minima: Vec<usize>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    scratch: SplineScratch,
    upper: Vec<f64>,
    lower: Vec<f64>,
}

impl Sifter {
    fn has_oscillation(&mut self, x: &[f64]) -> bool {
        find_extrema(x, &mut self.maxima, &mut self.minima);
        self.maxima.len() >= 2 && self.minima.len() >= 2
    }

    /// Extracts one IMF from `r`, or `None` when `r` has too few extrema.
    fn sift(&mut self, r: &[f64], cfg: &EemdConfig) -> Option<Vec<f64>> {
        if !self.has_oscillation(r) {
            return None;
        }
        let n = r.len();
        self.upper.resize(n, 0.0);
        self.lower.resize(n, 0.0);
        let mut h = r.to_vec();
        for iter in 0..cfg.max_sift_iters {
            if iter > 0 && !self.has_oscillation(&h) {
                break;
            }
            envelope(&h, &self.maxima, &mut self.kx, &mut self.ky, &mut self.scratch, &mut self.upper);
            envelope(&h, &self.minima, &mut self.kx, &mut self.ky, &mut self.scratch, &mut self.lower);
            let mut num = 0.0;
            let mut den = 0.0;
            for ((v, u), l) in h.iter_mut().zip(&self.upper).zip(&self.lower) {
                let mean = 0.5 * (u + l);
                num += mean * mean;
                den += *v * *v;
                *v -= mean;
            }
            if den == 0.0 || num / den < cfg.sift_stop_sd {
                break;
            }
        }
        Some(h)
    }
}

/// Empirical mode decomposition by envelope-mean sifting.
///
/// IMFs are peeled off until the remainder has fewer than two maxima or two
/// minima, or `max_imfs` is reached. The residual is the running remainder,
/// so `sum(imfs) + residual` reproduces the input up to rounding.
pub fn emd(signal: &[f64], cfg: &EemdConfig) -> Result<ImfSet, EemdError> {
    cfg.validate()?;
    if signal.len() < MIN_SIGNAL_LEN {
        return Err(EemdError::SignalTooShort {
            len: signal.len(),
            min: MIN_SIGNAL_LEN,
        });
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(EemdError::NonFinite);
    }
    Ok(emd_unchecked(signal, cfg, 1.0))
}

pub(crate) fn emd_unchecked(signal: &[f64], cfg: &EemdConfig, fs: f64) -> ImfSet {
    let max_imfs = cfg.imf_limit(signal.len());
    let mut sifter = Sifter::default();
    let mut residual = signal.to_vec();
    let mut imfs = Vec::new();
    while imfs.len() < max_imfs {
        let Some(imf) = sifter.sift(&residual, cfg) else {
            break;
        };
        for (r, v) in residual.iter_mut().zip(&imf) {
            *r -= v;
        }
        imfs.push(imf);
    }
    ImfSet {
        imfs,
        residual,
        fs,
        source_len: signal.len(),
    }
}
