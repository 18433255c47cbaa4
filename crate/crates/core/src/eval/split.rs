use std::collections::BTreeMap;

use super::{BeatRecord, EvalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    Chronological,
}

/// The unit within which the chronological cut is made.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitScope {
    /// Every subject contributes its earliest beats to training.
    PerSubject,
    /// All beats form one sequence ordered by beat time.
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitProtocol {
    pub train_fraction: f64,
    pub mode: SplitMode,
    pub scope: SplitScope,
}

impl Default for SplitProtocol {
    fn default() -> Self {
        SplitProtocol {
            train_fraction: 0.5,
            mode: SplitMode::Chronological,
            scope: SplitScope::PerSubject,
        }
    }
}

impl SplitProtocol {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(EvalError::InvalidProtocol(format!(
                "train fraction {} outside (0, 1)",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Indices into the input beat slice, each list in input order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

const MIN_BEATS: usize = 4;

/// First `ceil(train_fraction * n)` beats of each scope unit train, the rest
/// test.
pub fn chronological_split(beats: &[BeatRecord], protocol: &SplitProtocol) -> Result<Split, EvalError> {
    protocol.validate()?;
    let mut units: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, b) in beats.iter().enumerate() {
        units.entry(b.subject.as_str()).or_default().push(i);
    }
    for (subject, idx) in &units {
        if idx.windows(2).any(|w| beats[w[1]].beat_time_s < beats[w[0]].beat_time_s) {
            return Err(EvalError::NotChronological(subject.to_string()));
        }
    }

    let units: Vec<(String, Vec<usize>)> = match protocol.scope {
        SplitScope::PerSubject => units.into_iter().map(|(s, v)| (s.to_string(), v)).collect(),
        SplitScope::Pooled => {
            let mut all: Vec<usize> = (0..beats.len()).collect();
            all.sort_by(|&a, &b| beats[a].beat_time_s.total_cmp(&beats[b].beat_time_s));
            vec![("<pooled>".to_string(), all)]
        }
    };

    let mut split = Split::default();
    for (name, idx) in units {
        if idx.len() < MIN_BEATS {
            return Err(EvalError::TooFewBeats(name));
        }
        let n_train = train_count(idx.len(), protocol.train_fraction);
        split.train.extend_from_slice(&idx[..n_train]);
        split.test.extend_from_slice(&idx[n_train..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// `ceil(f * n)`, kept to at most `n - 1` so the test side is never empty.
fn train_count(n: usize, f: f64) -> usize {
    // the epsilon keeps 0.5 * 10 from rounding up to 6
    let c = (f * n as f64 - 1e-9).ceil().max(1.0) as usize;
    c.min(n - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::FeatureVector;
    use proptest::prelude::*;

    fn beat(subject: &str, t: f64) -> BeatRecord {
        BeatRecord {
            subject: subject.to_string(),
            beat_time_s: t,
            ptt_s: 0.25,
            features: FeatureVector { inv_ptt: 4.0, v_visco: -5.0, hr: 60.0, amp: 1.0 },
            sbp_ref: 120.0,
            dbp_ref: 80.0,
        }
    }

    #[test]
    fn ten_beats_half_and_half() {
        let beats: Vec<BeatRecord> = (0..10).map(|k| beat("a", k as f64)).collect();
        let s = chronological_split(&beats, &SplitProtocol::default()).unwrap();
        assert_eq!(s.train, vec![0, 1, 2, 3, 4]);
        assert_eq!(s.test, vec![5, 6, 7, 8, 9]);
    }

    #[test]
    fn ceil_of_odd_counts() {
        let beats: Vec<BeatRecord> = (0..7).map(|k| beat("a", k as f64)).collect();
        let s = chronological_split(&beats, &SplitProtocol::default()).unwrap();
        assert_eq!(s.train.len(), 4);
        let p = SplitProtocol { train_fraction: 0.3, ..Default::default() };
        assert_eq!(chronological_split(&beats, &p).unwrap().train.len(), 3);
    }

    #[test]
    fn too_few_and_unsorted() {
        let three: Vec<BeatRecord> = (0..3).map(|k| beat("s3", k as f64)).collect();
        assert_eq!(
            chronological_split(&three, &SplitProtocol::default()).unwrap_err(),
            EvalError::TooFewBeats("s3".into())
        );
        let mut beats: Vec<BeatRecord> = (0..6).map(|k| beat("b", k as f64)).collect();
        beats.swap(1, 2);
        assert_eq!(
            chronological_split(&beats, &SplitProtocol::default()).unwrap_err(),
            EvalError::NotChronological("b".into())
        );
        let bad = SplitProtocol { train_fraction: 1.0, ..Default::default() };
        assert!(matches!(chronological_split(&beats, &bad), Err(EvalError::InvalidProtocol(_))));
    }

    #[test]
    fn cohort_of_published_size() {
        // 28,525 beats over 364 subjects, interleaved in the input
        let (n_subj, total) = (364usize, 28_525usize);
        let mut counts = vec![total / n_subj; n_subj];
        for c in counts.iter_mut().take(total % n_subj) {
            *c += 1;
        }
        let mut beats = Vec::with_capacity(total);
        let longest = *counts.iter().max().unwrap();
        for k in 0..longest {
            for (s, &c) in counts.iter().enumerate() {
                if k < c {
                    beats.push(beat(&format!("s{s:03}"), k as f64 * 0.8));
                }
            }
        }
        let s = chronological_split(&beats, &SplitProtocol::default()).unwrap();
        assert_eq!(s.train.len() + s.test.len(), 28_525);
        let mut last_train: BTreeMap<&str, f64> = BTreeMap::new();
        for &i in &s.train {
            let e = last_train.entry(beats[i].subject.as_str()).or_insert(f64::NEG_INFINITY);
            *e = e.max(beats[i].beat_time_s);
        }
        assert_eq!(last_train.len(), 364);
        assert!(s.test.iter().all(|&i| beats[i].beat_time_s > last_train[beats[i].subject.as_str()]));
    }

    #[test]
    fn pooled_scope_cuts_by_time() {
        let beats: Vec<BeatRecord> = (0..8).map(|k| beat(if k % 2 == 0 { "a" } else { "b" }, k as f64)).collect();
        let p = SplitProtocol { scope: SplitScope::Pooled, ..Default::default() };
        let s = chronological_split(&beats, &p).unwrap();
        assert_eq!(s.train, vec![0, 1, 2, 3]);
    }

    proptest! {
        #[test]
        fn disjoint_and_exhaustive(
            sizes in prop::collection::vec(4usize..40, 1..8),
            f in 0.05f64..0.95,
            pooled in any::<bool>(),
        ) {
            let mut beats = Vec::new();
            for (s, &n) in sizes.iter().enumerate() {
                for k in 0..n {
                    beats.push(beat(&format!("{s}"), k as f64 + 0.1 * s as f64));
                }
            }
            let scope = if pooled { SplitScope::Pooled } else { SplitScope::PerSubject };
            let p = SplitProtocol { train_fraction: f, scope, ..Default::default() };
            let s = chronological_split(&beats, &p).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).cloned().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..beats.len()).collect::<Vec<_>>());
            if !pooled {
                for subj in 0..sizes.len() {
                    let name = subj.to_string();
                    let tr = s.train.iter().filter(|&&i| beats[i].subject == name).map(|&i| beats[i].beat_time_s).fold(f64::NEG_INFINITY, f64::max);
                    let te = s.test.iter().filter(|&&i| beats[i].subject == name).map(|&i| beats[i].beat_time_s).fold(f64::INFINITY, f64::min);
                    prop_assert!(tr < te);
                }
            }
        }
    }
}
