//! Acceptance criteria 1-8. Each test prints one `criterion N ...: PASS|FAIL`
//! line, then asserts.

use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use viscoptt::config::PipelineConfig;
use viscoptt::eemd::{eemd_decompose, emd, v_visco, EemdConfig, ImfSet};
use viscoptt::eval::{compute_metrics, validate_report, PublishedFigures, ValidationIssue};
use viscoptt::fiducial::{max_upstroke, tangent_foot, FiducialKind, FiducialPoint};
use viscoptt::pipeline::{run_on_records, run_pipeline};
use viscoptt::record::{save_record, RecordFile};
use viscoptt::regress::Target;
use viscoptt::signal::{makima_upsample, Channel, MakimaSpline, Waveform};
use viscoptt::synth::{synth_beat_train, synth_cohort, synth_subject, BpLaw, CohortSpec, SynthSubject};

fn verdict(n: u32, name: &str, ok: bool, detail: &str) {
    println!("criterion {n} ({name}): {} | {detail}", if ok { "PASS" } else { "FAIL" });
}

fn std_pop(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

#[test]
fn criterion_1_synthetic_ablation() {
    let start = Instant::now();
    let spec = CohortSpec { n_subjects: 50, n_beats: 200, seed: 0, ..Default::default() };
    let cohort = synth_cohort(&spec).unwrap();
    let share = cohort.iter().map(|s| s.viscous_share(&spec.law)).sum::<f64>() / cohort.len() as f64;
    let inputs = cohort.iter().map(|s| (s.id.clone(), Ok(RecordFile::from_synth(s)))).collect();
    let cfg = PipelineConfig { ablation: true, ..Default::default() };
    let out = run_on_records(&cfg, inputs).unwrap();
    let a = out.ablation.as_ref().unwrap();
    let reduction = a.rmse_reduction(Target::Sbp);
    let elapsed = start.elapsed();

    let ok = share >= 0.30 && reduction >= 0.15 && elapsed < Duration::from_secs(300) && out.skipped.is_empty();
    verdict(
        1,
        "synthetic ablation",
        ok,
        &format!(
            "{} subjects x {} beats, viscous share {:.1}%, SBP RMSE baseline {:.3} -> proposed {:.3} mmHg ({:.1}% reduction, need >= 15%), {:.1} s",
            out.processed.len(),
            spec.n_beats,
            100.0 * share,
            a.baseline.sbp.rmse,
            a.proposed.sbp.rmse,
            100.0 * reduction,
            elapsed.as_secs_f64()
        ),
    );
    assert!(ok);
}

fn multi_tone(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let tones: Vec<(f64, f64, f64)> = (0..rng.random_range(2..=4))
        .map(|_| (rng.random_range(0.2..2.0), rng.random_range(0.002..0.2), rng.random_range(0.0..2.0 * PI)))
        .collect();
    (0..n)
        .map(|i| tones.iter().map(|(a, f, p)| a * (2.0 * PI * f * i as f64 + p).sin()).sum())
        .collect()
}

#[test]
fn criterion_2_eemd_completeness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_eemd, mut worst_emd) = (0.0f64, 0.0f64);
    for s in 0..20 {
        let x = multi_tone(&mut rng, 2048);
        let sigma = std_pop(&x);
        let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cfg = EemdConfig { ensemble_size: 100, noise_std_ratio: 0.2, rng_seed: s, ..Default::default() };
        let err = |set: &ImfSet| {
            (0..x.len())
                .map(|i| (x[i] - set.imfs.iter().map(|m| m[i]).sum::<f64>() - set.residual[i]).abs())
                .fold(0.0, f64::max)
        };
        let bound = 2.0 * 0.2 * sigma / 100f64.sqrt();
        worst_eemd = worst_eemd.max(err(&eemd_decompose(&x, &cfg).unwrap()) / bound);
        worst_emd = worst_emd.max(err(&emd(&x, &cfg).unwrap()) / peak);
    }
    let elapsed = start.elapsed();
    let ok = worst_eemd <= 1.0 && worst_emd <= 1e-9 && elapsed < Duration::from_secs(180);
    verdict(
        2,
        "EEMD completeness",
        ok,
        &format!(
            "20 signals N=2048: worst EEMD error {:.2e} of the 2*0.2*std/sqrt(100) bound, worst EMD relative error {:.2e}, {:.1} s",
            worst_eemd,
            worst_emd,
            elapsed.as_secs_f64()
        ),
    );
    assert!(ok);
}

/// IMF set whose IMF2 + IMF3 equals `c`, split unevenly between the two.
fn imfs_with_sum(c: &[f64]) -> ImfSet {
    let n = c.len();
    let imf1: Vec<f64> = (0..n).map(|i| (i as f64 * 2.1).sin()).collect();
    let imf2: Vec<f64> = c.iter().enumerate().map(|(i, v)| 0.3 * v + 0.01 * i as f64).collect();
    let imf3: Vec<f64> = c.iter().enumerate().map(|(i, v)| 0.7 * v - 0.01 * i as f64).collect();
    ImfSet::new(vec![imf1, imf2, imf3], vec![0.0; n], 125.0).unwrap()
}

/// Brute-force `ln(mean(diff^2))` over `start..end` with one sample of left context.
fn energy_oracle(c: &[f64], start: usize, end: usize) -> f64 {
    let d: Vec<f64> = (start..end).map(|k| c[k] - c[k - 1]).collect();
    (d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64).max(1e-12).ln()
}

#[test]
fn criterion_3_v_visco_closed_forms() {
    let constant = v_visco(&imfs_with_sum(&[2.5; 64]), 1, 60).unwrap() - (1e-12f64).ln();
    let ramp: Vec<f64> = (0..64).map(|k| 0.1 * k as f64).collect();
    let ramp_err = v_visco(&imfs_with_sum(&ramp), 1, 60).unwrap() - 0.01f64.ln();
    let sine: Vec<f64> = (0..260).map(|k| (2.0 * PI * k as f64 / 20.0).sin()).collect();
    let sine_v = v_visco(&imfs_with_sum(&sine), 40, 240).unwrap();
    let sine_err = sine_v - energy_oracle(&sine, 40, 240);
    let sine_closed = sine_v - (2.0 * (PI / 20.0).sin().powi(2)).ln();

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut shift_err, mut scale_err) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.random_range(20..300);
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let start = rng.random_range(1..n / 2);
        let end = rng.random_range(start + 2..=n);
        let base = v_visco(&imfs_with_sum(&c), start, end).unwrap();
        let shift = rng.random_range(-100.0..100.0);
        let shifted: Vec<f64> = c.iter().map(|v| v + shift).collect();
        shift_err = shift_err.max((v_visco(&imfs_with_sum(&shifted), start, end).unwrap() - base).abs());
        let k = rng.random_range(0.01..100.0f64);
        let scaled: Vec<f64> = c.iter().map(|v| k * v).collect();
        let got = v_visco(&imfs_with_sum(&scaled), start, end).unwrap();
        scale_err = scale_err.max((got - base - 2.0 * k.ln()).abs());
    }

    let ok = constant.abs() <= 1e-6
        && ramp_err.abs() <= 1e-6
        && sine_err.abs() <= 1e-6
        && sine_closed.abs() <= 1e-6
        && (sine_v + 3.017).abs() < 1e-3
        && shift_err <= 1e-9
        && scale_err <= 1e-9;
    verdict(
        3,
        "v_visco closed forms",
        ok,
        &format!(
            "floor err {constant:.1e}, ramp err {ramp_err:.1e}, sine {sine_v:.6} (err {sine_err:.1e} vs brute force), 100 cases: shift err {shift_err:.1e}, 2 ln k err {scale_err:.1e}"
        ),
    );
    assert!(ok);
}

/// Raised-cosine upstroke of duration `rise`, then flat. The tangent at the
/// steepest point (mid-rise) meets the baseline at `onset + (1/2 - 1/pi) rise`.
fn ramp_pulse(onset: f64, rise: f64, offset: f64, scale: f64, fs: f64, n: usize) -> Waveform {
    let v = (0..n)
        .map(|i| {
            let tau = i as f64 / fs - onset;
            let r = if tau <= 0.0 {
                0.0
            } else if tau < rise {
                0.5 * (1.0 - (PI * tau / rise).cos())
            } else {
                1.0
            };
            offset + scale * r
        })
        .collect();
    Waveform::new(v, fs, Channel::Ppg).unwrap()
}

fn recovered_foot(w: &Waveform) -> f64 {
    let x = w.samples();
    let peak = (0..x.len()).fold(0, |b, i| if x[i] > x[b] { i } else { b });
    let up = max_upstroke(w, 0, peak + 1).unwrap();
    let dmin = (0..up.index).fold(0, |b, i| if x[i] < x[b] { i } else { b });
    let dmin = FiducialPoint { index: dmin, time_s: w.time_of(dmin), kind: FiducialKind::DiastolicMin };
    tangent_foot(w, &up, &dmin).unwrap().time_s
}

#[test]
fn criterion_4_tangent_geometry() {
    let fs = 1250.0;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut worst_invariance) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let onset = rng.random_range(0.1..0.3);
        let rise = rng.random_range(0.04..0.2);
        let offset = rng.random_range(-100.0..100.0);
        let scale = rng.random_range(0.01..100.0);
        let truth = onset + (0.5 - 1.0 / PI) * rise;
        let unit = recovered_foot(&ramp_pulse(onset, rise, 0.0, 1.0, fs, 700));
        let moved = recovered_foot(&ramp_pulse(onset, rise, offset, scale, fs, 700));
        worst = worst.max((moved - truth).abs());
        worst_invariance = worst_invariance.max((moved - unit).abs());
    }
    let ok = worst <= 2.0 / fs && worst_invariance <= 1e-9;
    verdict(
        4,
        "tangent geometry",
        ok,
        &format!(
            "1000 pulses: worst foot error {:.4} ms (limit 1.6 ms), worst offset/scale change {:.1e} s",
            1e3 * worst,
            worst_invariance
        ),
    );
    assert!(ok);
}

/// Modified Akima written out in Akima's power-basis form.
fn reference_makima(x: &[f64], y: &[f64], q: f64) -> f64 {
    let n = x.len();
    let mut m: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let (a, b) = (2.0 * m[0] - m[1], 2.0 * m[n - 2] - m[n - 3]);
    let (a2, b2) = (2.0 * a - m[0], 2.0 * b - m[n - 2]);
    m.insert(0, a);
    m.insert(0, a2);
    m.push(b);
    m.push(b2);
    // m[i + 2] is the secant of interval i
    let t: Vec<f64> = (0..n)
        .map(|i| {
            let (m1, m2, m3, m4) = (m[i], m[i + 1], m[i + 2], m[i + 3]);
            let wl = (m4 - m3).abs() + (m4 + m3).abs() / 2.0;
            let wr = (m2 - m1).abs() + (m2 + m1).abs() / 2.0;
            if wl + wr == 0.0 {
                (m2 + m3) / 2.0
            } else {
                (wl * m2 + wr * m3) / (wl + wr)
            }
        })
        .collect();
    let i = (0..n - 1).rev().find(|&i| x[i] <= q).unwrap_or(0);
    let h = x[i + 1] - x[i];
    let s = m[i + 2];
    let c2 = (3.0 * s - 2.0 * t[i] - t[i + 1]) / h;
    let c3 = (t[i] + t[i + 1] - 2.0 * s) / (h * h);
    let d = q - x[i];
    y[i] + t[i] * d + c2 * d * d + c3 * d * d * d
}

#[test]
fn criterion_5_makima() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let wave = |v: Vec<f64>| Waveform::new(v, 125.0, Channel::Ppg).unwrap();

    let raw: Vec<f64> = (0..200).map(|_| rng.random_range(-1e3..1e3)).collect();
    let up = makima_upsample(&wave(raw.clone()), 10).unwrap();
    let knots_exact = raw.iter().enumerate().all(|(i, &v)| up.samples()[10 * i].to_bits().abs_diff(v.to_bits()) <= 1);
    let layout_ok = up.len() == 199 * 10 + 1 && up.fs() == 1250.0;

    let step = makima_upsample(&wave(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]), 10).unwrap();
    let step_ok = step.samples().iter().all(|v| (-0.01..=1.01).contains(v));
    let line = makima_upsample(&wave(vec![0.0, 1.0, 2.0, 3.0, 4.0]), 10).unwrap();
    let line_err = line.samples().iter().enumerate().map(|(i, v)| (v - i as f64 / 10.0).abs()).fold(0.0, f64::max);

    let mut x = vec![0.0];
    for _ in 0..59 {
        let last = *x.last().unwrap();
        x.push(last + rng.random_range(0.05..2.0));
    }
    let y: Vec<f64> = x.iter().map(|&v| (v * 0.7f64).sin() * 3.0 + rng.random_range(-0.5..0.5)).collect();
    let spline = MakimaSpline::new(&x, &y).unwrap();
    let mut worst_rel = 0.0f64;
    for _ in 0..1000 {
        let q = rng.random_range(x[0]..x[59]);
        let (got, want) = (spline.eval(q), reference_makima(&x, &y, q));
        worst_rel = worst_rel.max((got - want).abs() / want.abs().max(1.0));
    }

    let ok = knots_exact && layout_ok && step_ok && line_err <= 1e-12 && worst_rel <= 1e-9;
    verdict(
        5,
        "Makima",
        ok,
        &format!(
            "knots exact: {knots_exact}, step data inside [-0.01, 1.01]: {step_ok}, linear data err {line_err:.1e}, 1000 random queries vs reference: worst relative err {worst_rel:.1e}"
        ),
    );
    assert!(ok);
}

/// One long record with i.i.d. per-beat HR, PTT and visco profiles and the
/// default BP law.
fn e2e_subject(seed: u64) -> SynthSubject {
    let n = 3000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hr: Vec<f64> = (0..n).map(|_| rng.random_range(65.0..75.0)).collect();
    let ptt: Vec<f64> = (0..n).map(|_| rng.random_range(0.15..0.35)).collect();
    let visco: Vec<f64> = (0..n).map(|_| rng.random_range(0.7..1.5)).collect();
    let record = synth_beat_train(n, &hr, &ptt, &visco, 125.0, seed).unwrap();
    let law = BpLaw::default();
    let noise = Normal::new(0.0, law.noise_sd).unwrap();
    let sbp = record.truth.iter().map(|t| law.sbp.eval(t.ptt_s, t.sigma_visc) + noise.sample(&mut rng)).collect();
    let dbp = record.truth.iter().map(|t| law.dbp.eval(t.ptt_s, t.sigma_visc) + noise.sample(&mut rng)).collect();
    SynthSubject { id: "e2e".into(), record, sbp, dbp }
}

#[test]
fn criterion_6_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e2e.csv");
    save_record(&RecordFile::from_synth(&e2e_subject(1)), &path).unwrap();
    let run = |name: &str| {
        let cfg = PipelineConfig { output_dir: dir.path().join(name), ..Default::default() };
        let out = run_pipeline(&cfg, &[path.clone()]).unwrap();
        (out, fs::read(cfg.output_dir.join("predictions.csv")).unwrap())
    };
    let (out, first) = run("a");
    let (_, second) = run("b");
    let (s, d) = (&out.sbp.pooled, &out.dbp.pooled);
    let r = |x: Option<f64>| x.unwrap_or(f64::NAN);
    let identical = first == second;
    let half = out.split.train.len() == out.split.test.len() || out.split.train.len() == out.split.test.len() + 1;
    let ok = s.rmse <= 3.0 && d.rmse <= 3.0 && r(s.pearson_r) >= 0.95 && r(d.pearson_r) >= 0.95 && identical && half;
    verdict(
        6,
        "end-to-end pipeline",
        ok,
        &format!(
            "{} beats ({} train / {} test): SBP RMSE {:.3} R {:.4}, DBP RMSE {:.3} R {:.4}, predictions.csv identical across runs: {identical}",
            out.beats.len(),
            out.split.train.len(),
            out.split.test.len(),
            s.rmse,
            r(s.pearson_r),
            d.rmse,
            r(d.pearson_r)
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_7_metric_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut reports_valid = true;
    for _ in 0..100 {
        let n = rng.random_range(2..500);
        let reference: Vec<f64> = (0..n).map(|_| rng.random_range(60.0..180.0)).collect();
        let offset = rng.random_range(-10.0..10.0);
        let est: Vec<f64> = reference.iter().map(|v| v + offset + rng.random_range(-15.0..15.0)).collect();
        let rep = compute_metrics(&est, &reference).unwrap();
        let diff: Vec<f64> = est.iter().zip(&reference).map(|(e, r)| e - r).collect();
        let bias = diff.iter().sum::<f64>() / n as f64;
        let var = diff.iter().map(|d| (d - bias).powi(2)).sum::<f64>() / n as f64;
        worst = worst.max((rep.rmse * rep.rmse - (bias * bias + var)).abs() / (rep.rmse * rep.rmse));
        reports_valid &= validate_report(&rep).is_empty();
    }

    // published SBP agreement: bias 0.4, LoA [-9.8, 10.6], RMSE 5.22
    let sbp = PublishedFigures { bias: 0.4, loa_low: -9.8, loa_high: 10.6, loa_resolution: 0.1, rmse: 5.22, rmse_resolution: 0.01 };
    let implied_sd = sbp.implied_sd();
    let published_ok = sbp.is_consistent() && (implied_sd - 5.2).abs() < 0.05 && ((10.6 + 9.8) / 2.0 - 1.96 * 5.2f64).abs() < 0.05;
    let with_baseline_rmse = PublishedFigures { rmse: 6.58, ..sbp };
    let flags_mismatch = !with_baseline_rmse.is_consistent();

    let mut tampered = compute_metrics(&[1.0, 2.0, 4.0], &[1.5, 2.5, 3.0]).unwrap();
    tampered.rmse *= 1.5;
    let flags_tampered = validate_report(&tampered).iter().any(|i| matches!(i, ValidationIssue::RmseDecomposition { .. }));

    let ok = worst <= 1e-9 && reports_valid && published_ok && flags_mismatch && flags_tampered;
    verdict(
        7,
        "metric identities",
        ok,
        &format!(
            "100 vectors: worst |rmse^2 - bias^2 - var| relative {worst:.1e}, all reports validate: {reports_valid}; published LoA implies SD {implied_sd:.3} and is consistent with RMSE 5.22: {published_ok}; RMSE 6.58 flagged: {flags_mismatch}; tampered report flagged: {flags_tampered}"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_8_full_population_run() {
    const SUBJECTS: usize = 364;
    const CYCLES: usize = 28_525;
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<PathBuf> = (0..SUBJECTS)
        .map(|s| {
            // 133 subjects with 79 cycles, 231 with 78
            let n = CYCLES / SUBJECTS + usize::from(s < CYCLES % SUBJECTS);
            let subject = synth_subject(&format!("p{s:03}"), n, 125.0, 8_000 + s as u64, &BpLaw::default()).unwrap();
            let path = dir.path().join(format!("p{s:03}.csv"));
            save_record(&RecordFile::from_synth(&subject), &path).unwrap();
            path
        })
        .collect();
    let cfg = PipelineConfig { output_dir: dir.path().join("out"), ..Default::default() };
    let out = run_pipeline(&cfg, &paths).unwrap();
    let kv = fs::read_to_string(cfg.output_dir.join("report.kv")).unwrap();
    let value = |key: &str| kv.lines().find_map(|l| l.strip_prefix(&format!("{key}="))).map(str::to_string);

    let mut aami_ok = true;
    let mut lines = Vec::new();
    for t in [Target::Sbp, Target::Dbp] {
        let r = &out.target(t).pooled;
        let expected = r.bias.abs() <= 5.0 && r.sd <= 8.0;
        aami_ok &= r.aami_pass == expected && value(&format!("{}.aami_pass", t.name())) == Some(expected.to_string());
        lines.push(format!(
            "{} ME {:+.2} SD {:.2} -> AAMI {}",
            t.name().to_uppercase(),
            r.bias,
            r.sd,
            if r.aami_pass { "pass" } else { "fail" }
        ));
    }
    let accounted = out.records_in == SUBJECTS && out.processed.len() + out.skipped.len() == out.records_in;
    let ok = aami_ok && accounted && out.processed.len() == SUBJECTS;
    verdict(
        8,
        "full population run",
        ok,
        &format!(
            "{} records, {} processed, {} beats kept of {CYCLES} cycles; {}; {:.1} s",
            out.records_in,
            out.processed.len(),
            out.beats.len(),
            lines.join(", "),
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(ok);
}
