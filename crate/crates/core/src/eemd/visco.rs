use super::{EemdError, ImfSet};

/// Energy floor applied before the logarithm in [`v_visco`].
pub const VISCO_ENERGY_FLOOR: f64 = 1e-12;

/// Viscoelastic velocity metric over the cycle window `start..end`.
///
/// `ln(mean(Δ(IMF2 + IMF3)²))` where `Δs(k) = s(k) - s(k-1)`. With `start > 0`
/// the sample before the window supplies the left context and all `K = end -
/// start` differences are used; at `start == 0` only `K - 1` are available.
pub fn v_visco(imfs: &ImfSet, start: usize, end: usize) -> Result<f64, EemdError> {
    if imfs.imfs.len() < 3 {
        return Err(EemdError::NotEnoughImfs {
            found: imfs.imfs.len(),
        });
    }
    check_window(start, end, imfs.source_len)?;
    let (imf2, imf3) = (&imfs.imfs[1], &imfs.imfs[2]);
    let first = start.max(1);
    let energy = (first..end)
        .map(|k| {
            let d = (imf2[k] + imf3[k]) - (imf2[k - 1] + imf3[k - 1]);
            d * d
        })
        .sum::<f64>()
        / (end - first) as f64;
    Ok(energy.max(VISCO_ENERGY_FLOOR).ln())
}

/// Same metric on an already-summed component.
pub fn v_visco_of_component(component: &[f64], start: usize, end: usize) -> Result<f64, EemdError> {
    check_window(start, end, component.len())?;
    let first = start.max(1);
    let energy = component[first - 1..end]
        .windows(2)
        .map(|p| (p[1] - p[0]) * (p[1] - p[0]))
        .sum::<f64>()
        / (end - first) as f64;
    Ok(energy.max(VISCO_ENERGY_FLOOR).ln())
}

fn check_window(start: usize, end: usize, len: usize) -> Result<(), EemdError> {
    if end > len || start > end {
        return Err(EemdError::WindowOutOfBounds { start, end, len });
    }
    let k = end - start;
    if k < 2 {
        return Err(EemdError::WindowTooShort { len: k });
    }
    Ok(())
}
