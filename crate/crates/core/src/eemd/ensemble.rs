use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::sift::emd_unchecked;
use super::{EemdConfig, EemdError, ImfSet, MIN_SIGNAL_LEN};

/// Members decomposed concurrently before being folded into the running sums.
/// Folding happens in member order, so results do not depend on thread count.
const MEMBER_BATCH: usize = 8;

/// Ensemble EMD: the mean decomposition of `signal + noise_j` over members
/// `j = 0..ensemble_size`, with white Gaussian noise of standard deviation
/// `noise_std_ratio * std(signal)` drawn from seed `rng_seed + j`.
///
/// Members with fewer IMFs contribute zeros to the missing modes. The
/// returned residual is the mean of `member_residual - member_noise`, which
/// equals `signal - sum(mean IMFs)` up to rounding; the injected noise that
/// survives averaging therefore stays inside the IMFs.
pub fn eemd_decompose(signal: &[f64], cfg: &EemdConfig) -> Result<ImfSet, EemdError> {
    eemd_with_rate(signal, cfg, 1.0)
}

pub(crate) fn eemd_with_rate(signal: &[f64], cfg: &EemdConfig, fs: f64) -> Result<ImfSet, EemdError> {
    cfg.validate()?;
    let n = signal.len();
    if n < MIN_SIGNAL_LEN {
        return Err(EemdError::SignalTooShort {
            len: n,
            min: MIN_SIGNAL_LEN,
        });
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(EemdError::NonFinite);
    }

    let sigma = cfg.noise_std_ratio * population_std(signal);
    let member = |j: usize| -> ImfSet {
        if sigma == 0.0 {
            return emd_unchecked(signal, cfg, fs);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(j as u64));
        let noise: Vec<f64> = (0..n)
            .map(|_| sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let noisy: Vec<f64> = signal.iter().zip(&noise).map(|(s, e)| s + e).collect();
        let mut set = emd_unchecked(&noisy, cfg, fs);
        for (r, e) in set.residual.iter_mut().zip(&noise) {
            *r -= e;
        }
        set
    };

    let mut imf_sums: Vec<Vec<f64>> = Vec::new();
    let mut residual_sum: Option<Vec<f64>> = None;
    let members: Vec<usize> = (0..cfg.ensemble_size).collect();
    for batch in members.chunks(MEMBER_BATCH) {
        let results: Vec<ImfSet> = batch.par_iter().map(|&j| member(j)).collect();
        for set in results {
            for (k, imf) in set.imfs.into_iter().enumerate() {
                if k < imf_sums.len() {
                    for (acc, v) in imf_sums[k].iter_mut().zip(&imf) {
                        *acc += v;
                    }
                } else {
                    // first member to reach mode k; earlier members contribute zero
                    imf_sums.push(imf);
                }
            }
            match residual_sum.as_mut() {
                None => residual_sum = Some(set.residual),
                Some(acc) => {
                    for (a, v) in acc.iter_mut().zip(&set.residual) {
                        *a += v;
                    }
                }
            }
        }
    }

    let count = cfg.ensemble_size as f64;
    for imf in &mut imf_sums {
        for v in imf.iter_mut() {
            *v /= count;
        }
    }
    let mut residual = residual_sum.unwrap_or_else(|| vec![0.0; n]);
    for v in &mut residual {
        *v /= count;
    }
    Ok(ImfSet {
        imfs: imf_sums,
        residual,
        fs,
        source_len: n,
    })
}

pub(crate) fn population_std(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}
