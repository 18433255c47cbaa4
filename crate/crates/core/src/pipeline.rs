//! Batch orchestration: records in, beat table, forests, reports and
//! artifacts out.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, info, warn};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, EemdRate, PipelineConfig};
use crate::eemd::{eemd_with_rate, v_visco, EemdError};
use crate::eval::{
    ablation_run, chronological_split, evaluate, fit_and_predict, per_subject_mean, validate_report, AblationReport,
    BeatRecord, EvalError, EvalReport, ModelScope, Predictions, PublishedFigures, Split, ValidationIssue,
    POOLED_MODEL_KEY,
};
use crate::fiducial::{detect_r_peaks, segment_beats, FiducialError};
use crate::record::{ingest, RecordError, RecordFile};
use crate::regress::{save_model, FeatureSet, FeatureVector, ModelIoError, Target, TARGET_RANGE_MMHG};
use crate::signal::{makima_upsample, zero_phase_filter, SignalError};

/// Records with fewer usable beats than this are skipped.
pub const MIN_RECORD_BEATS: usize = 8;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no records given")]
    NoRecords,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("all {0} records failed")]
    AllRecordsFailed(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Model { path: PathBuf, source: ModelIoError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Why one record was left out of the batch.
#[derive(Debug, Error)]
pub enum RecordFailure {
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Fiducial(#[from] FiducialError),
    #[error(transparent)]
    Eemd(#[from] EemdError),
    #[error("only {found} usable beats, need {MIN_RECORD_BEATS}")]
    TooFewBeats { found: usize },
    #[error("subject {0} already seen in an earlier record")]
    DuplicateSubject(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedRecord {
    pub subject: String,
    pub beats: Vec<BeatRecord>,
    /// R-peak intervals that did not yield a beat.
    pub dropped_beats: usize,
    /// Mean frequency of each IMF, Hz.
    pub imf_frequencies_hz: Vec<f64>,
}

/// Filter, upsample, detect R-peaks and feet, decompose the PPG and build one
/// [`BeatRecord`] per accepted cycle.
pub fn process_record(rec: &RecordFile, cfg: &PipelineConfig) -> Result<ProcessedRecord, RecordFailure> {
    let ecg = zero_phase_filter(&rec.ecg_waveform()?, &cfg.ecg_filter)?;
    let ppg = zero_phase_filter(&rec.ppg_waveform()?, &cfg.ppg_filter)?;
    let ppg_up = makima_upsample(&ppg, cfg.upsample_factor)?;
    let ecg = if cfg.upsample_ecg { makima_upsample(&ecg, cfg.upsample_factor)? } else { ecg };

    let peaks = detect_r_peaks(&ecg)?;
    let seg = segment_beats(&peaks, &ppg_up);
    let mut dropped_beats = seg.dropped.len();
    for d in &seg.dropped {
        debug!("{}: beat at {:.3} s dropped: {:?}", rec.subject_id, d.r_peak.time_s, d.reason);
    }
    if seg.beats.len() < MIN_RECORD_BEATS {
        return Err(RecordFailure::TooFewBeats { found: seg.beats.len() });
    }

    let decomposed = match cfg.eemd_rate {
        EemdRate::Record => &ppg,
        EemdRate::Upsampled => &ppg_up,
    };
    let imfs = eemd_with_rate(decomposed.samples(), &cfg.eemd, decomposed.fs())?;
    let fs_e = decomposed.fs();

    let mut beats = Vec::with_capacity(seg.beats.len());
    let grid = |t: f64| ((t - decomposed.t0()) * fs_e).round().max(0.0) as usize;
    for (i, b) in seg.beats.iter().enumerate() {
        // foot-to-foot cycle on the decomposition grid; foot + RR when the
        // next beat was dropped or is missing
        let next_foot = seg
            .beats
            .get(i + 1)
            .filter(|n| (n.r_peak.time_s - (b.r_peak.time_s + b.rr_s)).abs() < 1e-9)
            .map_or(b.foot.time_s + b.rr_s, |n| n.foot.time_s);
        let start = grid(b.foot.time_s);
        let end = grid(next_foot).min(decomposed.len());
        let v = match v_visco(&imfs, start.min(end), end) {
            Ok(v) => v,
            Err(e) => {
                debug!("{}: beat at {:.3} s dropped: {e}", rec.subject_id, b.r_peak.time_s);
                dropped_beats += 1;
                continue;
            }
        };
        let mid = rec.index_at(b.r_peak.time_s + 0.5 * b.rr_s);
        let (sbp, dbp) = (rec.sbp_ref[mid], rec.dbp_ref[mid]);
        let in_range = |p: f64| (TARGET_RANGE_MMHG.0..=TARGET_RANGE_MMHG.1).contains(&p);
        if !in_range(sbp) || !in_range(dbp) {
            debug!("{}: beat at {:.3} s dropped: reference {sbp}/{dbp} mmHg", rec.subject_id, b.r_peak.time_s);
            dropped_beats += 1;
            continue;
        }
        beats.push(BeatRecord {
            subject: rec.subject_id.clone(),
            beat_time_s: b.r_peak.time_s,
            ptt_s: b.ptt_s,
            features: FeatureVector { inv_ptt: 1.0 / b.ptt_s, v_visco: v, hr: b.hr_bpm, amp: b.amp },
            sbp_ref: sbp,
            dbp_ref: dbp,
        });
    }
    if beats.len() < MIN_RECORD_BEATS {
        return Err(RecordFailure::TooFewBeats { found: beats.len() });
    }
    Ok(ProcessedRecord {
        subject: rec.subject_id.clone(),
        beats,
        dropped_beats,
        imf_frequencies_hz: imfs.mean_frequencies(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordSummary {
    pub source: String,
    pub subject: String,
    pub beats: usize,
    pub dropped_beats: usize,
    pub imf_frequencies_hz: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedRecord {
    pub source: String,
    pub reason: String,
}

/// Estimates and reports for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetResult {
    pub predictions: Predictions,
    /// Over all test beats.
    pub pooled: EvalReport,
    pub per_subject: Vec<(String, EvalReport)>,
    /// Unweighted mean of the per-subject reports.
    pub subject_mean: EvalReport,
    pub issues: Vec<ValidationIssue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub records_in: usize,
    pub processed: Vec<RecordSummary>,
    pub skipped: Vec<SkippedRecord>,
    /// Sorted by subject, then beat time.
    pub beats: Vec<BeatRecord>,
    pub split: Split,
    pub sbp: TargetResult,
    pub dbp: TargetResult,
    pub ablation: Option<AblationReport>,
}

impl PipelineOutput {
    pub fn target(&self, target: Target) -> &TargetResult {
        match target {
            Target::Sbp => &self.sbp,
            Target::Dbp => &self.dbp,
        }
    }
}

/// Ingests `paths`, runs the whole pipeline and writes the artifacts to
/// `cfg.output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig, paths: &[PathBuf]) -> Result<PipelineOutput, PipelineError> {
    if paths.is_empty() {
        return Err(PipelineError::NoRecords);
    }
    cfg.validate()?;
    let inputs: Vec<(String, Result<RecordFile, RecordFailure>)> = paths
        .par_iter()
        .map(|p| (p.display().to_string(), ingest(p).map_err(RecordFailure::from)))
        .collect();
    let out = run_on_records(cfg, inputs)?;
    write_artifacts(&out, cfg)?;
    Ok(out)
}

/// Pipeline over already-loaded records, without touching the disk. Each
/// input is `(source name, record or load failure)`.
pub fn run_on_records(
    cfg: &PipelineConfig,
    inputs: Vec<(String, Result<RecordFile, RecordFailure>)>,
) -> Result<PipelineOutput, PipelineError> {
    if inputs.is_empty() {
        return Err(PipelineError::NoRecords);
    }
    cfg.validate()?;
    let records_in = inputs.len();
    let results: Vec<(String, Result<ProcessedRecord, RecordFailure>)> = inputs
        .into_par_iter()
        .map(|(source, rec)| {
            let r = rec.and_then(|rec| process_record(&rec, cfg));
            (source, r)
        })
        .collect();

    let mut seen = BTreeSet::new();
    let mut processed = Vec::new();
    let mut skipped = Vec::new();
    let mut beats = Vec::new();
    for (source, r) in results {
        let r = r.and_then(|p| {
            if seen.insert(p.subject.clone()) {
                Ok(p)
            } else {
                Err(RecordFailure::DuplicateSubject(p.subject))
            }
        });
        match r {
            Ok(p) => {
                info!("{source}: subject {} gave {} beats, dropped {}", p.subject, p.beats.len(), p.dropped_beats);
                processed.push(RecordSummary {
                    source,
                    subject: p.subject,
                    beats: p.beats.len(),
                    dropped_beats: p.dropped_beats,
                    imf_frequencies_hz: p.imf_frequencies_hz,
                });
                beats.extend(p.beats);
            }
            Err(e) => {
                warn!("{source}: skipped: {e}");
                skipped.push(SkippedRecord { source, reason: e.to_string() });
            }
        }
    }
    if processed.is_empty() {
        return Err(PipelineError::AllRecordsFailed(records_in));
    }
    processed.sort_by(|a, b| a.subject.cmp(&b.subject));
    // stable: beats of one subject stay in time order
    beats.sort_by(|a, b| a.subject.cmp(&b.subject));

    let split = chronological_split(&beats, &cfg.split)?;
    let (sbp_pred, dbp_pred, ablation) = if cfg.ablation {
        let r = ablation_run(&beats, &cfg.forest, &cfg.split, cfg.model_scope)?;
        (r.proposed.sbp_predictions.clone(), r.proposed.dbp_predictions.clone(), Some(r))
    } else {
        let fit = |t| fit_and_predict(&beats, &split, &cfg.forest, FeatureSet::PROPOSED, cfg.model_scope, t);
        (fit(Target::Sbp)?, fit(Target::Dbp)?, None)
    };
    let sbp = target_result(&beats, &split, sbp_pred)?;
    let dbp = target_result(&beats, &split, dbp_pred)?;
    Ok(PipelineOutput { records_in, processed, skipped, beats, split, sbp, dbp, ablation })
}

fn target_result(beats: &[BeatRecord], split: &Split, predictions: Predictions) -> Result<TargetResult, EvalError> {
    let (pooled, per_subject) = evaluate(beats, &split.test, &predictions.est, predictions.target)?;
    let reports: Vec<EvalReport> = per_subject.iter().map(|(_, r)| r.clone()).collect();
    let subject_mean = per_subject_mean(&reports).ok_or(EvalError::Empty)?;
    let mut issues = validate_report(&pooled);
    if !PublishedFigures::from_report(&pooled, 0.1, 0.01).is_consistent() {
        issues.push(ValidationIssue::InconsistentRounding);
    }
    for issue in &issues {
        warn!("{} report failed validation: {issue:?}", predictions.target.name());
    }
    Ok(TargetResult { predictions, pooled, per_subject, subject_mean, issues })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Keeps `[A-Za-z0-9._-]`, replaces everything else with `_`.
fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

/// Writes `beats.csv`, `predictions.csv`, `report.txt`, `report.kv` and the
/// models. Pooled models go to `model_<target>.bin`, per-subject ones to
/// `models/<subject>/model_<target>.bin`.
pub fn write_artifacts(out: &PipelineOutput, cfg: &PipelineConfig) -> Result<(), PipelineError> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_file(&dir.join("beats.csv"), &beats_csv(out))?;
    write_file(&dir.join("predictions.csv"), &predictions_csv(out))?;
    write_file(&dir.join("report.txt"), &report_text(out, cfg))?;
    write_file(&dir.join("report.kv"), &report_kv(out, cfg))?;
    for target in [Target::Sbp, Target::Dbp] {
        let file = format!("model_{}.bin", target.name());
        for (key, model) in &out.target(target).predictions.models {
            let path = if key == POOLED_MODEL_KEY && cfg.model_scope == ModelScope::Pooled {
                dir.join(&file)
            } else {
                let sub = dir.join("models").join(file_safe(key));
                fs::create_dir_all(&sub).map_err(io_err(&sub))?;
                sub.join(&file)
            };
            save_model(model, &path).map_err(|source| PipelineError::Model { path: path.clone(), source })?;
        }
    }
    Ok(())
}

fn table(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

pub fn beats_csv(out: &PipelineOutput) -> String {
    let mut in_test = vec![false; out.beats.len()];
    for &i in &out.split.test {
        in_test[i] = true;
    }
    let header = ["subject", "beat_time", "ptt_s", "inv_ptt", "v_visco", "hr", "amp", "sbp_ref", "dbp_ref", "split"];
    table(
        &header,
        out.beats.iter().zip(&in_test).map(|(b, &test)| {
            let f = &b.features;
            vec![
                b.subject.clone(),
                b.beat_time_s.to_string(),
                b.ptt_s.to_string(),
                f.inv_ptt.to_string(),
                f.v_visco.to_string(),
                f.hr.to_string(),
                f.amp.to_string(),
                b.sbp_ref.to_string(),
                b.dbp_ref.to_string(),
                if test { "test" } else { "train" }.to_string(),
            ]
        }),
    )
}

/// Test beats with estimates and references for both targets; baseline-arm
/// estimates are appended when the ablation ran.
pub fn predictions_csv(out: &PipelineOutput) -> String {
    let mut header = vec!["subject", "beat_time", "sbp_est", "sbp_ref", "dbp_est", "dbp_ref"];
    if out.ablation.is_some() {
        header.extend(["sbp_est_baseline", "dbp_est_baseline"]);
    }
    table(
        &header,
        out.split.test.iter().enumerate().map(|(k, &i)| {
            let b = &out.beats[i];
            let mut row = vec![
                b.subject.clone(),
                b.beat_time_s.to_string(),
                out.sbp.predictions.est[k].to_string(),
                b.sbp_ref.to_string(),
                out.dbp.predictions.est[k].to_string(),
                b.dbp_ref.to_string(),
            ];
            if let Some(a) = &out.ablation {
                row.push(a.baseline.sbp_predictions.est[k].to_string());
                row.push(a.baseline.dbp_predictions.est[k].to_string());
            }
            row
        }),
    )
}

fn kv_report(s: &mut String, prefix: &str, r: &EvalReport) {
    let pearson = r.pearson_r.map_or("NA".to_string(), |v| v.to_string());
    for (k, v) in [
        ("rmse", r.rmse.to_string()),
        ("mae", r.mae.to_string()),
        ("pearson_r", pearson),
        ("bias", r.bias.to_string()),
        ("sd", r.sd.to_string()),
        ("loa_low", r.loa_low.to_string()),
        ("loa_high", r.loa_high.to_string()),
        ("aami_pass", r.aami_pass.to_string()),
        ("n_beats", r.n_beats.to_string()),
        ("n_subjects", r.n_subjects.to_string()),
    ] {
        let _ = writeln!(s, "{prefix}.{k}={v}");
    }
}

fn scope_name(scope: ModelScope) -> &'static str {
    match scope {
        ModelScope::PerSubject => "per_subject",
        ModelScope::Pooled => "pooled",
    }
}

pub fn report_kv(out: &PipelineOutput, cfg: &PipelineConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "records_in={}", out.records_in);
    let _ = writeln!(s, "records_processed={}", out.processed.len());
    let _ = writeln!(s, "records_skipped={}", out.skipped.len());
    let _ = writeln!(s, "subjects={}", out.processed.len());
    let _ = writeln!(s, "beats={}", out.beats.len());
    let _ = writeln!(s, "beats_train={}", out.split.train.len());
    let _ = writeln!(s, "beats_test={}", out.split.test.len());
    let _ = writeln!(s, "beats_dropped={}", out.processed.iter().map(|p| p.dropped_beats).sum::<usize>());
    let _ = writeln!(s, "model_scope={}", scope_name(cfg.model_scope));
    for target in [Target::Sbp, Target::Dbp] {
        let name = target.name();
        let t = out.target(target);
        kv_report(&mut s, &name, &t.pooled);
        kv_report(&mut s, &format!("{name}.subject_mean"), &t.subject_mean);
        let _ = writeln!(s, "{name}.validator={}", if t.issues.is_empty() { "ok" } else { "failed" });
    }
    if let Some(a) = &out.ablation {
        for target in [Target::Sbp, Target::Dbp] {
            let name = target.name();
            kv_report(&mut s, &format!("ablation.baseline.{name}"), a.baseline.report(target));
            kv_report(&mut s, &format!("ablation.proposed.{name}"), a.proposed.report(target));
            let _ = writeln!(s, "ablation.{name}.rmse_delta={}", a.rmse_delta(target));
            let _ = writeln!(s, "ablation.{name}.rmse_reduction={}", a.rmse_reduction(target));
        }
    }
    s
}

fn text_row(s: &mut String, label: &str, r: &EvalReport) {
    let pearson = r.pearson_r.map_or("    NA".to_string(), |v| format!("{v:6.3}"));
    let _ = writeln!(
        s,
        "{label:<22} {:>7.2} {:>7.2} {pearson} {:>7.2} {:>7.2} [{:>7.2}, {:>7.2}] {:>5} {:>7}",
        r.rmse,
        r.mae,
        r.bias,
        r.sd,
        r.loa_low,
        r.loa_high,
        if r.aami_pass { "pass" } else { "fail" },
        r.n_beats
    );
}

pub fn report_text(out: &PipelineOutput, cfg: &PipelineConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "records: {} in, {} processed, {} skipped",
        out.records_in,
        out.processed.len(),
        out.skipped.len()
    );
    for sk in &out.skipped {
        let _ = writeln!(s, "  skipped {}: {}", sk.source, sk.reason);
    }
    let _ = writeln!(
        s,
        "beats: {} ({} train, {} test), models {}",
        out.beats.len(),
        out.split.train.len(),
        out.split.test.len(),
        scope_name(cfg.model_scope)
    );
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<22} {:>7} {:>7} {:>6} {:>7} {:>7} {:>19} {:>5} {:>7}",
        "", "RMSE", "MAE", "R", "bias", "SD", "95% LoA", "AAMI", "beats"
    );
    for target in [Target::Sbp, Target::Dbp] {
        let t = out.target(target);
        text_row(&mut s, &target.name().to_uppercase(), &t.pooled);
        text_row(&mut s, &format!("{} subject mean", target.name().to_uppercase()), &t.subject_mean);
    }
    if let Some(a) = &out.ablation {
        let _ = writeln!(s);
        let _ = writeln!(s, "ablation (same split and seeds)");
        for target in [Target::Sbp, Target::Dbp] {
            text_row(&mut s, &format!("{} baseline", target.name().to_uppercase()), a.baseline.report(target));
            text_row(&mut s, &format!("{} proposed", target.name().to_uppercase()), a.proposed.report(target));
            let _ = writeln!(
                s,
                "{:<22} {:>+7.2} ({:.1}% reduction)",
                format!("{} RMSE delta", target.name().to_uppercase()),
                a.rmse_delta(target),
                100.0 * a.rmse_reduction(target)
            );
        }
    }
    let _ = writeln!(s);
    for target in [Target::Sbp, Target::Dbp] {
        let t = out.target(target);
        if t.issues.is_empty() {
            let _ = writeln!(s, "{} report validation: ok", target.name().to_uppercase());
        } else {
            let _ = writeln!(s, "{} report validation: {:?}", target.name().to_uppercase(), t.issues);
        }
    }
    s
}
