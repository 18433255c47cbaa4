use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::train::{synth_beat_train, SynthRecord};
use super::SynthError;

/// `a / PTT + b * sigma_visc + c`, mmHg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearLaw {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LinearLaw {
    pub fn eval(&self, ptt_s: f64, sigma_visc: f64) -> f64 {
        self.a / ptt_s + self.b * sigma_visc + self.c
    }
}

/// Reference pressure law for synthetic subjects. `sigma_visc` is the RMS
/// Kelvin-Voigt viscous stress of the beat's upstroke at unit viscosity, so
/// `b` plays the role of the wall viscosity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpLaw {
    pub sbp: LinearLaw,
    pub dbp: LinearLaw,
    /// SD of the additive Gaussian noise on both targets, mmHg.
    pub noise_sd: f64,
}

impl Default for BpLaw {
    fn default() -> Self {
        BpLaw {
            sbp: LinearLaw { a: 15.0, b: 2.2, c: 32.5 },
            dbp: LinearLaw { a: 9.0, b: 1.3, c: 28.0 },
            noise_sd: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohortSpec {
    pub n_subjects: usize,
    pub n_beats: usize,
    pub fs: f64,
    pub seed: u64,
    pub law: BpLaw,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec { n_subjects: 50, n_beats: 200, fs: 125.0, seed: 0, law: BpLaw::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSubject {
    pub id: String,
    pub record: SynthRecord,
    /// Per-beat references, aligned with `record.truth`.
    pub sbp: Vec<f64>,
    pub dbp: Vec<f64>,
}

/// Mean-reverting random walk clipped to `[lo, hi]`.
fn ou_profile(rng: &mut ChaCha8Rng, n: usize, mean: f64, sd: f64, lo: f64, hi: f64) -> Vec<f64> {
    const THETA: f64 = 0.1;
    let step = Normal::new(0.0, sd * (2.0 * THETA - THETA * THETA).sqrt()).unwrap();
    let mut x = (mean + sd * Normal::new(0.0, 1.0).unwrap().sample(rng)).clamp(lo, hi);
    (0..n)
        .map(|_| {
            let v = x;
            x = (x + THETA * (mean - x) + step.sample(rng)).clamp(lo, hi);
            v
        })
        .collect()
}

/// One subject with independent mean-reverting HR, PTT and visco profiles.
///
/// Subject means: HR uniform in 60-85 bpm, PTT uniform in 0.22-0.28 s, visco
/// factor 1.35. Beat-to-beat SDs: 5 bpm, 25 ms and 0.3.
pub fn synth_subject(id: &str, n_beats: usize, fs: f64, seed: u64, law: &BpLaw) -> Result<SynthSubject, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hr_mean = rng.random_range(60.0..85.0);
    let ptt_mean = rng.random_range(0.22..0.28);
    let hr = ou_profile(&mut rng, n_beats, hr_mean, 5.0, 45.0, 120.0);
    let ptt = ou_profile(&mut rng, n_beats, ptt_mean, 0.025, 0.15, 0.40);
    let visco = ou_profile(&mut rng, n_beats, 1.35, 0.3, 0.7, 2.2);
    let record = synth_beat_train(n_beats, &hr, &ptt, &visco, fs, rng.random())?;

    let noise = Normal::new(0.0, law.noise_sd).unwrap();
    let (mut sbp, mut dbp) = (Vec::with_capacity(n_beats), Vec::with_capacity(n_beats));
    for t in &record.truth {
        sbp.push(law.sbp.eval(t.ptt_s, t.sigma_visc) + noise.sample(&mut rng));
        dbp.push(law.dbp.eval(t.ptt_s, t.sigma_visc) + noise.sample(&mut rng));
    }
    Ok(SynthSubject { id: id.to_string(), record, sbp, dbp })
}

/// Subjects `subj000`, `subj001`, ... with seeds derived from `spec.seed`.
pub fn synth_cohort(spec: &CohortSpec) -> Result<Vec<SynthSubject>, SynthError> {
    (0..spec.n_subjects)
        .map(|s| {
            let seed = spec.seed.wrapping_mul(1_000_003).wrapping_add(s as u64);
            synth_subject(&format!("subj{s:03}"), spec.n_beats, spec.fs, seed, &spec.law)
        })
        .collect()
}

impl SynthSubject {
    /// Share of the SBP variance carried by the viscous term `b * sigma_visc`.
    pub fn viscous_share(&self, law: &BpLaw) -> f64 {
        let visc: Vec<f64> = self.record.truth.iter().map(|t| law.sbp.b * t.sigma_visc).collect();
        variance(&visc) / variance(&self.sbp)
    }
}

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
}
