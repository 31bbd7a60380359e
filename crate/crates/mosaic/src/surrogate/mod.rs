//! Random-forest surrogate of the objective over encoded pipelines, plus the
//! acquisition machinery built on it: Expected Improvement, the partial
//! surrogate `q_hat` over a structural prefix, and the softmax policy.

mod forest;

pub use forest::SurrogateForest;

use rand::Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use thiserror::Error;

use crate::space::{PipelinePrefix, SearchSpace, SpaceError};

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("insufficient data: need >= 2 training rows, got {0}")]
    InsufficientData(usize),
    #[error("dimension mismatch: trained on {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Forest prediction: mean of per-tree estimates and the population variance
/// across trees (zero for a single tree).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

/// Evaluated (encoded pipeline, reward) pairs.
#[derive(Debug, Clone, Default)]
pub struct TrainingSet {
    pub rows: Vec<(Vec<f64>, f64)>,
}

impl TrainingSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row; rewards must lie in [0,1] and dimensions must agree.
    pub fn push(&mut self, x: Vec<f64>, reward: f64) {
        debug_assert!((0.0..=1.0).contains(&reward), "reward {reward} out of range");
        debug_assert!(self.rows.last().map(|r| r.0.len() == x.len()).unwrap_or(true));
        self.rows.push((x, reward));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ForestParams {
    pub n_trees: usize,
    pub min_leaf: usize,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 30,
            min_leaf: 3,
            bootstrap: true,
        }
    }
}

/// Mean via deviations from the first element, so a constant slice averages
/// to exactly that constant.
pub(crate) fn stable_mean(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty());
    let first = values[0];
    first + values.iter().map(|v| v - first).sum::<f64>() / values.len() as f64
}

/// Expected improvement of `x` over `f_best` under the surrogate's Gaussian
/// predictive distribution (maximization form). Degenerate σ = 0 falls back
/// to the deterministic improvement `max(0, μ − f_best)`.
pub fn expected_improvement(model: &SurrogateForest, x: &[f64], f_best: f64) -> Result<f64, SurrogateError> {
    let p = model.predict(x)?;
    Ok(ei_from_prediction(p.mean, p.variance.sqrt(), f_best))
}

pub fn ei_from_prediction(mean: f64, sigma: f64, f_best: f64) -> f64 {
    if sigma <= 0.0 {
        return (mean - f_best).max(0.0);
    }
    let std_normal = Normal::standard();
    let z = (mean - f_best) / sigma;
    ((mean - f_best) * std_normal.cdf(z) + sigma * std_normal.pdf(z)).max(0.0)
}

/// Monte-Carlo estimate of the mean surrogate value over the completions of
/// `prefix·action` under the default distribution, from `n_s` samples.
pub fn q_hat<R: Rng>(
    model: &SurrogateForest,
    space: &SearchSpace,
    prefix: &PipelinePrefix,
    action: &str,
    n_s: usize,
    rng: &mut R,
) -> Result<f64, SurrogateError> {
    let child = prefix.child(action);
    let mut means = Vec::with_capacity(n_s);
    for _ in 0..n_s {
        let x = space.sample_default(&child, rng)?;
        means.push(model.predict(&space.encode(&x))?.mean);
    }
    Ok(stable_mean(&means))
}

/// Softmax over a slice of `q_hat` values.
pub fn softmax(qs: &[f64]) -> Vec<f64> {
    let max = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = qs.iter().map(|q| (q - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// The selection prior π(a|s): softmax of `q_hat` over `actions`.
pub fn policy<R: Rng>(
    model: &SurrogateForest,
    space: &SearchSpace,
    prefix: &PipelinePrefix,
    actions: &[String],
    n_s: usize,
    rng: &mut R,
) -> Result<Vec<f64>, SurrogateError> {
    debug_assert!(!actions.is_empty());
    let qs = actions
        .iter()
        .map(|a| q_hat(model, space, prefix, a, n_s, rng))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(softmax(&qs))
}

#[cfg(test)]
mod tests;
