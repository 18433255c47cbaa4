use std::collections::BTreeMap;

use rayon::prelude::*;

use super::metrics::{compute_metrics, EvalReport};
use super::split::{chronological_split, Split, SplitProtocol};
use super::{BeatRecord, EvalError};
use crate::regress::{fit_forest_on, predict, FeatureSet, FeatureVector, ForestHyperparams, ForestModel, Target};

/// Whether each subject gets its own calibrated forest or one forest is
/// trained on every subject's training beats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelScope {
    PerSubject,
    Pooled,
}

pub const POOLED_MODEL_KEY: &str = "pooled";

/// Test-set estimates for one target, aligned with `Split::test`.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub target: Target,
    pub est: Vec<f64>,
    /// Trained models keyed by subject id, or by `"pooled"`.
    pub models: Vec<(String, ForestModel)>,
}

/// Trains on `split.train` and predicts `split.test`.
pub fn fit_and_predict(
    beats: &[BeatRecord],
    split: &Split,
    hp: &ForestHyperparams,
    features: FeatureSet,
    scope: ModelScope,
    target: Target,
) -> Result<Predictions, EvalError> {
    let groups: Vec<(String, Vec<usize>, Vec<usize>)> = match scope {
        ModelScope::Pooled => vec![(POOLED_MODEL_KEY.to_string(), split.train.clone(), split.test.clone())],
        ModelScope::PerSubject => {
            let mut by: BTreeMap<&str, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
            for &i in &split.train {
                by.entry(&beats[i].subject).or_default().0.push(i);
            }
            for &i in &split.test {
                by.entry(&beats[i].subject).or_default().1.push(i);
            }
            by.into_iter().map(|(s, (tr, te))| (s.to_string(), tr, te)).collect()
        }
    };

    let fitted: Vec<(String, ForestModel, Vec<(usize, f64)>)> = groups
        .into_par_iter()
        .map(|(key, train, test)| {
            let x: Vec<FeatureVector> = train.iter().map(|&i| beats[i].features).collect();
            let y: Vec<f64> = train.iter().map(|&i| beats[i].reference(target)).collect();
            let model = fit_forest_on(&x, &y, hp, target, features)
                .map_err(|source| EvalError::Fit { subject: key.clone(), source })?;
            let est = test.iter().map(|&i| (i, predict(&model, &beats[i].features))).collect();
            Ok((key, model, est))
        })
        .collect::<Result<_, EvalError>>()?;

    let mut by_index: BTreeMap<usize, f64> = BTreeMap::new();
    let mut models = Vec::with_capacity(fitted.len());
    for (key, model, est) in fitted {
        by_index.extend(est);
        models.push((key, model));
    }
    let est = split.test.iter().map(|i| by_index[i]).collect();
    Ok(Predictions { target, est, models })
}

/// Beat-pooled report over the test beats plus one report per subject.
pub fn evaluate(
    beats: &[BeatRecord],
    test: &[usize],
    est: &[f64],
    target: Target,
) -> Result<(EvalReport, Vec<(String, EvalReport)>), EvalError> {
    let reference: Vec<f64> = test.iter().map(|&i| beats[i].reference(target)).collect();
    let mut pooled = compute_metrics(est, &reference)?;
    let mut by: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (k, &i) in test.iter().enumerate() {
        let e = by.entry(&beats[i].subject).or_default();
        e.0.push(est[k]);
        e.1.push(reference[k]);
    }
    pooled.n_subjects = by.len();
    let per_subject = by
        .into_iter()
        .map(|(s, (e, r))| compute_metrics(&e, &r).map(|m| (s.to_string(), m)))
        .collect::<Result<_, _>>()?;
    Ok((pooled, per_subject))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationArm {
    pub features: FeatureSet,
    pub sbp: EvalReport,
    pub dbp: EvalReport,
    pub sbp_predictions: Predictions,
    pub dbp_predictions: Predictions,
}

impl AblationArm {
    pub fn report(&self, target: Target) -> &EvalReport {
        match target {
            Target::Sbp => &self.sbp,
            Target::Dbp => &self.dbp,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub split: Split,
    pub baseline: AblationArm,
    pub proposed: AblationArm,
}

impl AblationReport {
    /// `proposed - baseline` RMSE, mmHg.
    pub fn rmse_delta(&self, target: Target) -> f64 {
        self.proposed.report(target).rmse - self.baseline.report(target).rmse
    }

    /// Fractional RMSE reduction of the proposed arm relative to baseline.
    pub fn rmse_reduction(&self, target: Target) -> f64 {
        -self.rmse_delta(target) / self.baseline.report(target).rmse
    }
}

/// Runs the elastic-only baseline `{1/PTT, HR, Amp}` and the full feature
/// set on one split with the same hyperparameters and seeds.
pub fn ablation_run(
    beats: &[BeatRecord],
    hp: &ForestHyperparams,
    protocol: &SplitProtocol,
    scope: ModelScope,
) -> Result<AblationReport, EvalError> {
    let split = chronological_split(beats, protocol)?;
    let arm = |features: FeatureSet| -> Result<AblationArm, EvalError> {
        let sbp_predictions = fit_and_predict(beats, &split, hp, features, scope, Target::Sbp)?;
        let dbp_predictions = fit_and_predict(beats, &split, hp, features, scope, Target::Dbp)?;
        let (sbp, _) = evaluate(beats, &split.test, &sbp_predictions.est, Target::Sbp)?;
        let (dbp, _) = evaluate(beats, &split.test, &dbp_predictions.est, Target::Dbp)?;
        Ok(AblationArm { features, sbp, dbp, sbp_predictions, dbp_predictions })
    };
    let baseline = arm(FeatureSet::BASELINE)?;
    let proposed = arm(FeatureSet::PROPOSED)?;
    Ok(AblationReport { split, baseline, proposed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Four subjects, 120 beats each. `visco_weight` scales a V_visco term
    /// in both targets.
    fn cohort(visco_weight: f64, seed: u64) -> Vec<BeatRecord> {
        cohort_with(visco_weight, seed, 120, 1.0, (0.18, 0.32))
    }

    fn cohort_with(visco_weight: f64, seed: u64, n: usize, sigma: f64, ptt_range: (f64, f64)) -> Vec<BeatRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut beats = Vec::new();
        for s in 0..4 {
            for k in 0..n {
                let ptt = rng.random_range(ptt_range.0..ptt_range.1);
                let v = rng.random_range(-7.0..-3.0);
                let f = FeatureVector { inv_ptt: 1.0 / ptt, v_visco: v, hr: rng.random_range(55.0..95.0), amp: rng.random_range(0.5..1.5) };
                let sbp = 40.0 + 18.0 * f.inv_ptt + visco_weight * (v + 5.0) + noise.sample(&mut rng);
                beats.push(BeatRecord {
                    subject: format!("s{s}"),
                    beat_time_s: k as f64 * 0.8,
                    ptt_s: ptt,
                    features: f,
                    sbp_ref: sbp,
                    dbp_ref: 0.6 * sbp + 5.0,
                });
            }
        }
        beats
    }

    fn hp() -> ForestHyperparams {
        ForestHyperparams { n_trees: 40, ..Default::default() }
    }

    #[test]
    fn uninformative_visco_gives_matching_arms() {
        // 200 beats per subject, 2 mmHg reference noise, PTT within 0.22-0.28 s
        for seed in 0..3 {
            let beats = cohort_with(0.0, seed, 200, 2.0, (0.22, 0.28));
            let r = ablation_run(&beats, &ForestHyperparams::default(), &SplitProtocol::default(), ModelScope::PerSubject)
                .unwrap();
            let (b, p) = (r.baseline.sbp.rmse, r.proposed.sbp.rmse);
            assert!((p - b).abs() <= 0.1 * b, "baseline {b} proposed {p}");
        }
    }

    #[test]
    fn informative_visco_helps() {
        let beats = cohort(12.0, 2);
        let r = ablation_run(&beats, &hp(), &SplitProtocol::default(), ModelScope::PerSubject).unwrap();
        assert!(r.proposed.sbp.rmse < r.baseline.sbp.rmse);
        assert!(r.rmse_reduction(Target::Sbp) > 0.0);
        assert_eq!(r.baseline.sbp_predictions.models.len(), 4);
    }

    #[test]
    fn arms_share_split_and_seeds() {
        let beats = cohort(5.0, 3);
        let r = ablation_run(&beats, &hp(), &SplitProtocol::default(), ModelScope::Pooled).unwrap();
        assert_eq!(r.split, chronological_split(&beats, &SplitProtocol::default()).unwrap());
        let (b, p) = (&r.baseline.sbp_predictions.models[0].1, &r.proposed.sbp_predictions.models[0].1);
        assert_eq!(b.hyperparams, p.hyperparams);
        assert_eq!(b.train_count, p.train_count);
        assert_eq!(r.baseline.sbp.n_beats, r.proposed.sbp.n_beats);
        assert_eq!(r.baseline.sbp.n_subjects, 4);
    }

    #[test]
    fn per_subject_predictions_align_with_test_beats() {
        let beats = cohort(5.0, 4);
        let split = chronological_split(&beats, &SplitProtocol::default()).unwrap();
        let p = fit_and_predict(&beats, &split, &hp(), FeatureSet::PROPOSED, ModelScope::PerSubject, Target::Dbp).unwrap();
        assert_eq!(p.est.len(), split.test.len());
        let (pooled, per) = evaluate(&beats, &split.test, &p.est, Target::Dbp).unwrap();
        assert_eq!(per.len(), 4);
        assert_eq!(per.iter().map(|(_, r)| r.n_beats).sum::<usize>(), pooled.n_beats);
        let again = fit_and_predict(&beats, &split, &hp(), FeatureSet::PROPOSED, ModelScope::PerSubject, Target::Dbp).unwrap();
        assert_eq!(p, again);
    }
}
