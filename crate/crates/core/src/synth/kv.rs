use super::SynthError;

/// Kelvin-Voigt element: a spring `e` in parallel with a damper `eta`,
/// driven by the strain waveform `strain(t)`.
#[derive(Debug, Clone, Copy)]
pub struct KelvinVoigtParams<F> {
    pub e: f64,
    pub eta: f64,
    pub strain: F,
}

/// `sigma(t) = E * eps(t) + eta * d eps/dt` on a uniform grid.
///
/// The strain rate is the central difference of the sampled strain, one-sided
/// at the two ends.
pub fn kv_pressure<F: Fn(f64) -> f64>(params: &KelvinVoigtParams<F>, t_grid: &[f64]) -> Result<Vec<f64>, SynthError> {
    if !(params.e >= 0.0 && params.e.is_finite() && params.eta >= 0.0 && params.eta.is_finite()) {
        return Err(SynthError::InvalidParams(format!("E = {}, eta = {}", params.e, params.eta)));
    }
    let n = t_grid.len();
    if n < 2 {
        return Err(SynthError::GridTooShort(n));
    }
    let h = (t_grid[n - 1] - t_grid[0]) / (n - 1) as f64;
    if !(h > 0.0) {
        return Err(SynthError::NonUniformGrid { index: 1 });
    }
    if let Some(i) = (1..n).find(|&i| ((t_grid[i] - t_grid[i - 1]) - h).abs() > 1e-6 * h) {
        return Err(SynthError::NonUniformGrid { index: i });
    }

    let eps: Vec<f64> = t_grid.iter().map(|&t| (params.strain)(t)).collect();
    Ok((0..n)
        .map(|i| {
            let rate = if i == 0 {
                (eps[1] - eps[0]) / (t_grid[1] - t_grid[0])
            } else if i == n - 1 {
                (eps[n - 1] - eps[n - 2]) / (t_grid[n - 1] - t_grid[n - 2])
            } else {
                (eps[i + 1] - eps[i - 1]) / (t_grid[i + 1] - t_grid[i - 1])
            };
            params.e * eps[i] + params.eta * rate
        })
        .collect())
}
