//! Comparison optimizers: plain random search over the default distribution
//! and a tree-free variant that runs the surrogate-guided candidate
//! selection over the whole space.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::optimizer::{
    evaluate_with_cutoff, Budget, EvaluationRecord, Evaluator, OptimizationResult, OptimizerError,
    OptimizerParams,
};
use crate::space::{PipelinePrefix, SearchSpace};

/// Evaluates `budget` pipelines sampled i.i.d. from the default
/// distribution. Result records share the optimizer's format.
pub fn run_baseline_random(
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    budget: usize,
    cutoff: std::time::Duration,
    seed: u64,
) -> Result<OptimizationResult, OptimizerError> {
    let report = space.validate();
    if !report.is_empty() {
        return Err(OptimizerError::InvalidSpace(report));
    }
    if budget == 0 {
        return Err(OptimizerError::InvalidParams(
            "budget must allow at least one evaluation".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let empty = PipelinePrefix::empty();
    let mut history = Vec::with_capacity(budget);
    let mut curve = Vec::with_capacity(budget);
    let mut best_so_far = f64::NEG_INFINITY;
    let mut best_index = 0;
    for walk_index in 0..budget {
        let pipeline = space.sample_default(&empty, &mut rng)?;
        let out = evaluate_with_cutoff(evaluator, &pipeline, cutoff);
        let record = EvaluationRecord {
            reward: out.reward,
            status: out.status,
            duration: out.duration,
            walk_index,
            noiseless: out.noiseless,
            pipeline,
        };
        if record.reward > best_so_far {
            best_so_far = record.reward;
            best_index = walk_index;
        }
        curve.push((walk_index, best_so_far));
        history.push(record);
    }
    Ok(OptimizationResult {
        best: history[best_index].clone(),
        history,
        incumbent_curve: curve,
        ensemble_weights: None,
        truncated: false,
        warnings: Vec::new(),
    })
}

/// The surrogate-only baseline: identical initialization and candidate
/// machinery as the tree search, but every iteration proposes from the whole
/// space instead of a selected subtree.
pub fn run_baseline_bo(
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    params: &OptimizerParams,
) -> Result<OptimizationResult, OptimizerError> {
    crate::optimizer::run_with_driver(space, evaluator, params, crate::optimizer::Driver::BoOnly)
}

/// Convenience constructor matching the harness's per-cell call shape.
pub fn baseline_bo_params(budget: usize, seed: u64) -> OptimizerParams {
    OptimizerParams::new(Budget::evaluations(budget), seed)
}
