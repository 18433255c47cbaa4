use super::EvalError;

/// AAMI limits on mean error and its standard deviation, mmHg.
pub const AAMI_MAX_BIAS: f64 = 5.0;
pub const AAMI_MAX_SD: f64 = 8.0;
/// Normal quantile for 95% limits of agreement.
pub const LOA_Z: f64 = 1.96;

/// Agreement between estimates and references. Differences are taken as
/// `est - ref`; `sd` is the population standard deviation of them.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rmse: f64,
    pub mae: f64,
    /// Absent when either side has zero variance.
    pub pearson_r: Option<f64>,
    pub bias: f64,
    pub sd: f64,
    pub loa_low: f64,
    pub loa_high: f64,
    pub aami_pass: bool,
    pub n_beats: usize,
    pub n_subjects: usize,
}

pub fn compute_metrics(est: &[f64], reference: &[f64]) -> Result<EvalReport, EvalError> {
    if est.len() != reference.len() {
        return Err(EvalError::LengthMismatch { est: est.len(), reference: reference.len() });
    }
    if est.is_empty() {
        return Err(EvalError::Empty);
    }
    if let Some(i) = est.iter().chain(reference).position(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite(i % est.len()));
    }
    let n = est.len() as f64;
    let diffs: Vec<f64> = est.iter().zip(reference).map(|(e, r)| e - r).collect();
    let bias = diffs.iter().sum::<f64>() / n;
    let mse = diffs.iter().map(|d| d * d).sum::<f64>() / n;
    let mae = diffs.iter().map(|d| d.abs()).sum::<f64>() / n;
    let sd = (diffs.iter().map(|d| (d - bias).powi(2)).sum::<f64>() / n).sqrt();
    Ok(EvalReport {
        rmse: mse.sqrt(),
        mae,
        pearson_r: pearson(est, reference),
        bias,
        sd,
        loa_low: bias - LOA_Z * sd,
        loa_high: bias + LOA_Z * sd,
        aami_pass: bias.abs() <= AAMI_MAX_BIAS && sd <= AAMI_MAX_SD,
        n_beats: est.len(),
        n_subjects: 1,
    })
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa > 0.0 && sbb > 0.0 {
        Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
    } else {
        None
    }
}

/// Unweighted mean of per-subject reports, for the subject-level view next
/// to the beat-pooled one. Pearson R is averaged over subjects that have it.
pub fn per_subject_mean(reports: &[EvalReport]) -> Option<EvalReport> {
    if reports.is_empty() {
        return None;
    }
    let k = reports.len() as f64;
    let mean = |f: fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / k;
    let rs: Vec<f64> = reports.iter().filter_map(|r| r.pearson_r).collect();
    let bias = mean(|r| r.bias);
    let sd = mean(|r| r.sd);
    Some(EvalReport {
        rmse: mean(|r| r.rmse),
        mae: mean(|r| r.mae),
        pearson_r: (!rs.is_empty()).then(|| rs.iter().sum::<f64>() / rs.len() as f64),
        bias,
        sd,
        loa_low: bias - LOA_Z * sd,
        loa_high: bias + LOA_Z * sd,
        aami_pass: bias.abs() <= AAMI_MAX_BIAS && sd <= AAMI_MAX_SD,
        n_beats: reports.iter().map(|r| r.n_beats).sum(),
        n_subjects: reports.len(),
    })
}
