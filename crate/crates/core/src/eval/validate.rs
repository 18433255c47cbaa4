use super::metrics::{EvalReport, AAMI_MAX_BIAS, AAMI_MAX_SD, LOA_Z};

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    /// `rmse^2` differs from `bias^2 + sd^2`.
    RmseDecomposition { rmse_sq: f64, bias_sq_plus_var: f64 },
    /// `mae > rmse` or a negative error measure.
    ErrorOrdering,
    /// Limits of agreement are not `bias +- 1.96 sd`.
    LimitsOfAgreement,
    PearsonOutOfRange(f64),
    AamiFlagInconsistent,
    /// Bias, limits and RMSE rounded to 0.1 / 0.01 mmHg no longer fit
    /// together.
    InconsistentRounding,
}

/// Internal consistency rules every emitted report must satisfy.
pub fn validate_report(r: &EvalReport) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let rmse_sq = r.rmse * r.rmse;
    let parts = r.bias * r.bias + r.sd * r.sd;
    if (rmse_sq - parts).abs() > 1e-9 * rmse_sq.max(parts) + 1e-12 {
        issues.push(ValidationIssue::RmseDecomposition { rmse_sq, bias_sq_plus_var: parts });
    }
    if !(r.mae >= 0.0 && r.rmse >= r.mae * (1.0 - 1e-12)) {
        issues.push(ValidationIssue::ErrorOrdering);
    }
    let tol = 1e-9 * (r.bias.abs() + r.sd).max(1.0);
    if (r.loa_low - (r.bias - LOA_Z * r.sd)).abs() > tol || (r.loa_high - (r.bias + LOA_Z * r.sd)).abs() > tol {
        issues.push(ValidationIssue::LimitsOfAgreement);
    }
    if let Some(p) = r.pearson_r {
        if !(-1.0..=1.0).contains(&p) {
            issues.push(ValidationIssue::PearsonOutOfRange(p));
        }
    }
    if r.aami_pass != (r.bias.abs() <= AAMI_MAX_BIAS && r.sd <= AAMI_MAX_SD) {
        issues.push(ValidationIssue::AamiFlagInconsistent);
    }
    issues
}

/// Rounded figures as they appear in a printed report, with the resolution
/// of their last digit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedFigures {
    pub bias: f64,
    pub loa_low: f64,
    pub loa_high: f64,
    /// Resolution of bias and limits.
    pub loa_resolution: f64,
    pub rmse: f64,
    pub rmse_resolution: f64,
}

impl PublishedFigures {
    /// SD implied by the limits, `(high - low) / (2 * 1.96)`.
    pub fn implied_sd(&self) -> f64 {
        (self.loa_high - self.loa_low) / (2.0 * LOA_Z)
    }

    /// Whether some unrounded (bias, low, high, rmse) within half a unit of
    /// the printed values satisfies `centre of LoA == bias` and
    /// `rmse^2 == bias^2 + sd^2`.
    pub fn is_consistent(&self) -> bool {
        let h = self.loa_resolution / 2.0;
        let centre = (self.loa_low + self.loa_high) / 2.0;
        if (centre - self.bias).abs() > 2.0 * h {
            return false;
        }
        let sd_lo = (self.loa_high - self.loa_low - 2.0 * h) / (2.0 * LOA_Z);
        let sd_hi = (self.loa_high - self.loa_low + 2.0 * h) / (2.0 * LOA_Z);
        let b_abs_lo = (self.bias.abs() - h).max(0.0);
        let b_abs_hi = self.bias.abs() + h;
        let rmse_lo = (b_abs_lo.powi(2) + sd_lo.max(0.0).powi(2)).sqrt();
        let rmse_hi = (b_abs_hi.powi(2) + sd_hi.powi(2)).sqrt();
        let hr = self.rmse_resolution / 2.0;
        self.rmse + hr >= rmse_lo && self.rmse - hr <= rmse_hi
    }

    /// The printed report's figures, rounded the way they are written.
    pub fn from_report(r: &EvalReport, loa_resolution: f64, rmse_resolution: f64) -> Self {
        let round = |v: f64, res: f64| (v / res).round() * res;
        PublishedFigures {
            bias: round(r.bias, loa_resolution),
            loa_low: round(r.loa_low, loa_resolution),
            loa_high: round(r.loa_high, loa_resolution),
            loa_resolution,
            rmse: round(r.rmse, rmse_resolution),
            rmse_resolution,
        }
    }
}
