//! Greedy weighted ensemble over the models evaluated during a search:
//! forward selection with replacement on a validation set, returning the
//! weights of the best-scoring step.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("no candidate models")]
    NoCandidates,
    #[error("prediction matrix malformed: {0}")]
    Malformed(String),
    #[error("ensemble references model {0}, but only {1} prediction rows were provided")]
    MissingRow(usize, usize),
}

/// Per-candidate validation predictions: `rows[model][instance][class]`
/// holds class probabilities, `targets[instance]` the true label.
#[derive(Debug, Clone, Default)]
pub struct PredictionMatrix {
    pub rows: Vec<Vec<Vec<f64>>>,
    pub targets: Vec<usize>,
}

impl PredictionMatrix {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        let n_instances = self.targets.len();
        for (mi, row) in self.rows.iter().enumerate() {
            if row.len() != n_instances {
                return Err(EnsembleError::Malformed(format!(
                    "model {mi} predicts {} instances, expected {n_instances}",
                    row.len()
                )));
            }
            for (ii, probs) in row.iter().enumerate() {
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(EnsembleError::Malformed(format!(
                        "model {mi}, instance {ii}: probabilities sum to {sum}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Normalized weights over candidate model indices.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnsembleWeights {
    pub weights: std::collections::BTreeMap<usize, f64>,
    /// Number of greedy steps behind the returned weights.
    pub size: usize,
}

fn argmax_label(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > probs[best] {
            best = i; // strict: ties keep the lowest class index
        }
    }
    best
}

fn accuracy_of_sum(sum: &[Vec<f64>], count: usize, targets: &[usize]) -> f64 {
    let correct = sum
        .iter()
        .zip(targets)
        .filter(|(probs, &t)| {
            let scaled: Vec<f64> = probs.iter().map(|p| p / count as f64).collect();
            argmax_label(&scaled) == t
        })
        .count();
    correct as f64 / targets.len() as f64
}

/// Greedy forward selection with replacement. At each step the candidate
/// maximizing the validation accuracy of the uniform average over the
/// selected multiset is added (ties to the lowest model index); the weights
/// of the best step seen are returned.
pub fn build_ensemble(preds: &PredictionMatrix, max_size: usize) -> Result<EnsembleWeights, EnsembleError> {
    if preds.rows.is_empty() {
        return Err(EnsembleError::NoCandidates);
    }
    preds.validate()?;
    let n_instances = preds.targets.len();
    let n_classes = preds.rows[0].first().map(|p| p.len()).unwrap_or(0);

    let mut counts = vec![0usize; preds.rows.len()];
    let mut sum = vec![vec![0.0; n_classes]; n_instances];
    let mut best: Option<(f64, Vec<usize>, usize)> = None; // (score, counts, size)

    for step in 1..=max_size.max(1) {
        let mut step_best: Option<(f64, usize)> = None;
        for (mi, row) in preds.rows.iter().enumerate() {
            let trial: Vec<Vec<f64>> = sum
                .iter()
                .zip(row)
                .map(|(s, p)| s.iter().zip(p).map(|(a, b)| a + b).collect())
                .collect();
            let score = accuracy_of_sum(&trial, step, &preds.targets);
            if step_best.map(|(s, _)| score > s).unwrap_or(true) {
                step_best = Some((score, mi));
            }
        }
        let (score, mi) = step_best.expect("candidates nonempty");
        counts[mi] += 1;
        for (s, p) in sum.iter_mut().zip(&preds.rows[mi]) {
            for (a, b) in s.iter_mut().zip(p) {
                *a += b;
            }
        }
        if best.as_ref().map(|(s, _, _)| score > *s).unwrap_or(true) {
            best = Some((score, counts.clone(), step));
        }
    }

    let (_, counts, size) = best.expect("at least one step");
    let weights = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (i, c as f64 / size as f64))
        .collect();
    Ok(EnsembleWeights { weights, size })
}

/// Per-instance weighted average of probability rows, argmax class (ties to
/// the lowest class index).
pub fn ensemble_predict(
    weights: &EnsembleWeights,
    rows: &[Vec<Vec<f64>>],
) -> Result<Vec<usize>, EnsembleError> {
    let max_idx = weights.weights.keys().copied().max().unwrap_or(0);
    if max_idx >= rows.len() {
        return Err(EnsembleError::MissingRow(max_idx, rows.len()));
    }
    let n_instances = rows.first().map(|r| r.len()).unwrap_or(0);
    let n_classes = rows
        .first()
        .and_then(|r| r.first())
        .map(|p| p.len())
        .unwrap_or(0);
    let mut out = Vec::with_capacity(n_instances);
    for i in 0..n_instances {
        let mut avg = vec![0.0; n_classes];
        for (&mi, &w) in &weights.weights {
            for (a, p) in avg.iter_mut().zip(&rows[mi][i]) {
                *a += w * p;
            }
        }
        out.push(argmax_label(&avg));
    }
    Ok(out)
}

/// Validation accuracy of a weight vector, used by the search loop and the
/// harness.
pub fn ensemble_accuracy(weights: &EnsembleWeights, preds: &PredictionMatrix) -> Result<f64, EnsembleError> {
    let labels = ensemble_predict(weights, &preds.rows)?;
    let correct = labels.iter().zip(&preds.targets).filter(|(a, b)| a == b).count();
    Ok(correct as f64 / preds.targets.len() as f64)
}
