use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tree::{grow, Tree, TreeParams};
use super::{FeatureSet, FeatureVector, RegressError, Target, N_FEATURES, TARGET_RANGE_MMHG};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestHyperparams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features tried at each split.
    pub mtry: usize,
    pub rng_seed: u64,
    pub bootstrap: bool,
}

impl Default for ForestHyperparams {
    fn default() -> Self {
        ForestHyperparams {
            n_trees: 100,
            max_depth: 15,
            min_samples_leaf: 2,
            mtry: 2,
            rng_seed: 0,
            bootstrap: true,
        }
    }
}

impl ForestHyperparams {
    pub fn validate(&self) -> Result<(), RegressError> {
        let bad = |m: &str| Err(RegressError::InvalidHyperparams(m.to_string()));
        if self.n_trees < 1 {
            return bad("n_trees must be at least 1");
        }
        if self.max_depth < 1 {
            return bad("max_depth must be at least 1");
        }
        if self.min_samples_leaf < 1 {
            return bad("min_samples_leaf must be at least 1");
        }
        if !(1..=N_FEATURES).contains(&self.mtry) {
            return bad("mtry must lie in 1..=4");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub hyperparams: ForestHyperparams,
    pub target: Target,
    pub features: FeatureSet,
    pub train_count: usize,
    /// Training target range; predictions are clamped to it.
    pub y_min: f64,
    pub y_max: f64,
    /// Summed SSE reduction per feature over all trees.
    pub split_gains: [f64; N_FEATURES],
}

/// Fits a forest on all four features.
pub fn fit_forest(
    x: &[FeatureVector],
    y: &[f64],
    hp: &ForestHyperparams,
    target: Target,
) -> Result<ForestModel, RegressError> {
    fit_forest_on(x, y, hp, target, FeatureSet::PROPOSED)
}

/// Fits a forest that may only split on `features`.
///
/// Tree `i` draws its bootstrap sample and split candidates from a ChaCha8
/// stream seeded with `rng_seed + i`, so the result does not depend on how
/// trees are scheduled across threads.
pub fn fit_forest_on(
    x: &[FeatureVector],
    y: &[f64],
    hp: &ForestHyperparams,
    target: Target,
    features: FeatureSet,
) -> Result<ForestModel, RegressError> {
    hp.validate()?;
    if x.len() != y.len() {
        return Err(RegressError::LengthMismatch { features: x.len(), targets: y.len() });
    }
    let min = (2 * hp.min_samples_leaf).max(1);
    if x.len() < min {
        return Err(RegressError::TooFewSamples { n: x.len(), min });
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(RegressError::NonFiniteFeature(i));
    }
    if let Some((index, &value)) = y
        .iter()
        .enumerate()
        .find(|(_, v)| !(TARGET_RANGE_MMHG.0..=TARGET_RANGE_MMHG.1).contains(*v))
    {
        return Err(RegressError::TargetOutOfRange { index, value });
    }

    let rows: Vec<[f64; N_FEATURES]> = x.iter().map(FeatureVector::as_array).collect();
    let active = features.indices();
    let params = TreeParams {
        max_depth: hp.max_depth,
        min_samples_leaf: hp.min_samples_leaf,
        mtry: hp.mtry,
        features: &active,
    };
    let n = rows.len();
    let grown: Vec<(Tree, [f64; N_FEATURES])> = (0..hp.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(hp.rng_seed.wrapping_add(t as u64));
            let sample: Vec<usize> = if hp.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut gains = [0.0; N_FEATURES];
            let tree = grow(&rows, y, sample, &params, &mut rng, &mut gains);
            (tree, gains)
        })
        .collect();

    let mut split_gains = [0.0; N_FEATURES];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, gains) in grown {
        for (total, g) in split_gains.iter_mut().zip(gains) {
            *total += g;
        }
        trees.push(tree);
    }
    Ok(ForestModel {
        trees,
        hyperparams: *hp,
        target,
        features,
        train_count: n,
        y_min: y.iter().cloned().fold(f64::INFINITY, f64::min),
        y_max: y.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        split_gains,
    })
}

/// Mean of the per-tree leaf values.
pub fn predict(model: &ForestModel, x: &FeatureVector) -> f64 {
    let row = x.as_array();
    let sum: f64 = model.trees.iter().map(|t| t.predict(&row)).sum();
    (sum / model.trees.len() as f64).clamp(model.y_min, model.y_max)
}

/// Share of the total variance reduction credited to each feature. All
/// zeros when the forest never split.
pub fn feature_importance(model: &ForestModel) -> [f64; N_FEATURES] {
    let total: f64 = model.split_gains.iter().sum();
    if total > 0.0 {
        model.split_gains.map(|g| g / total)
    } else {
        [0.0; N_FEATURES]
    }
}
