//! Top-level optimization loop: budget management, plain and warm-started
//! initialization, evaluation cutoffs, and result assembly.

use std::collections::{BTreeSet, HashSet};
use std::panic::AssertUnwindSafe;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::{self, EnsembleError, EnsembleWeights, PredictionMatrix};
use crate::mcts::{self, MctsError, MctsTree, SearchParams};
use crate::meta::{nearest_datasets, Archive, ArchiveError, MetaFeatures};
use crate::space::{Pipeline, PipelinePrefix, SearchSpace, SpaceError};
use crate::surrogate::{self, ForestParams, SurrogateError, SurrogateForest, TrainingSet};

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid search space: {0:?}")]
    InvalidSpace(Vec<String>),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("initialization failed: every initial evaluation reported failure")]
    InitializationFailed,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Mcts(#[from] MctsError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub pipeline: Pipeline,
    pub reward: f64,
    pub status: Status,
    /// Evaluator-reported duration in seconds.
    pub duration: f64,
    pub walk_index: usize,
    /// Noise-free objective value when the evaluator knows it (synthetic
    /// benchmarks); never consulted by the search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noiseless: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best: EvaluationRecord,
    pub history: Vec<EvaluationRecord>,
    /// (walk_index, best-so-far reward), one entry per evaluation.
    pub incumbent_curve: Vec<(usize, f64)>,
    pub ensemble_weights: Option<EnsembleWeights>,
    /// Set when the budget ran out before initialization completed.
    pub truncated: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct Budget {
    pub max_evaluations: Option<usize>,
    pub max_wall_clock: Option<Duration>,
}

impl Budget {
    pub fn evaluations(n: usize) -> Self {
        Self {
            max_evaluations: Some(n),
            max_wall_clock: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_evaluations.is_none() && self.max_wall_clock.is_none() {
            return Err("budget needs max_evaluations and/or max_wall_clock".to_string());
        }
        if self.max_evaluations == Some(0) {
            return Err("budget must allow at least one evaluation".to_string());
        }
        Ok(())
    }

    fn allows(&self, done: usize, elapsed: Duration) -> bool {
        self.max_evaluations.map(|m| done < m).unwrap_or(true)
            && self.max_wall_clock.map(|w| elapsed < w).unwrap_or(true)
    }
}

#[derive(Debug, Clone)]
pub enum InitMode {
    Vanilla,
    MetaLearning {
        k: usize,
        archive: Archive,
        meta: MetaFeatures,
    },
}

#[derive(Debug, Clone)]
pub struct OptimizerParams {
    pub search: SearchParams,
    /// Default-distribution evaluations per step-1 algorithm during
    /// initialization, on top of the default pipeline.
    pub kappa: usize,
    pub budget: Budget,
    pub eval_cutoff: Duration,
    pub init_mode: InitMode,
    pub ensemble: bool,
    pub ensemble_max_size: usize,
    pub seed: u64,
}

impl OptimizerParams {
    pub fn new(budget: Budget, seed: u64) -> Self {
        Self {
            search: SearchParams::default(),
            kappa: 3,
            budget,
            eval_cutoff: Duration::from_secs(300),
            init_mode: InitMode::Vanilla,
            ensemble: false,
            ensemble_max_size: 50,
            seed,
        }
    }
}

/// Raw outcome reported by an evaluator; sanitized into an
/// [`EvaluationRecord`] by [`evaluate_with_cutoff`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub reward: f64,
    pub status: Status,
    pub duration: f64,
    pub noiseless: Option<f64>,
}

impl EvalOutcome {
    pub fn ok(reward: f64, duration: f64) -> Self {
        Self {
            reward,
            status: Status::Ok,
            duration,
            noiseless: None,
        }
    }
}

/// The true objective. Implementations must respect `cutoff` within a factor
/// of two; evaluations overrunning it are reported as timeouts.
pub trait Evaluator: Send + Sync {
    fn evaluate(&self, pipeline: &Pipeline, cutoff: Duration) -> EvalOutcome;

    /// Per-validation-instance class probabilities of the model behind
    /// `pipeline`, if the evaluator retains them (required for ensembling).
    fn validation_predictions(&self, _pipeline: &Pipeline) -> Option<Vec<Vec<f64>>> {
        None
    }

    fn validation_targets(&self) -> Option<Vec<usize>> {
        None
    }
}

/// Runs one evaluation, abandoning the wait once `cutoff` elapses. Panics
/// and out-of-range rewards are reported as failures; any non-ok status
/// carries reward 0.
pub fn evaluate_with_cutoff(evaluator: &dyn Evaluator, pipeline: &Pipeline, cutoff: Duration) -> EvalOutcome {
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|s| {
        s.spawn(move || {
            let result = std::panic::catch_unwind(AssertUnwindSafe(|| evaluator.evaluate(pipeline, cutoff)));
            let _ = tx.send(result);
        });
        match rx.recv_timeout(cutoff) {
            Ok(Ok(out)) => sanitize(out),
            Ok(Err(_)) => EvalOutcome {
                reward: 0.0,
                status: Status::Failed,
                duration: 0.0,
                noiseless: None,
            },
            Err(_) => EvalOutcome {
                reward: 0.0,
                status: Status::Timeout,
                duration: cutoff.as_secs_f64(),
                noiseless: None,
            },
        }
    })
}

fn sanitize(mut out: EvalOutcome) -> EvalOutcome {
    match out.status {
        Status::Ok => {
            if !out.reward.is_finite() || !(0.0..=1.0).contains(&out.reward) {
                out.status = Status::Failed;
                out.reward = 0.0;
            }
        }
        Status::Failed | Status::Timeout => out.reward = 0.0,
    }
    out
}

struct RunState<'a> {
    space: &'a SearchSpace,
    evaluator: &'a dyn Evaluator,
    cutoff: Duration,
    history: Vec<EvaluationRecord>,
    training: TrainingSet,
    evaluated_keys: HashSet<String>,
    warnings: Vec<String>,
    truncated: bool,
}

impl<'a> RunState<'a> {
    fn new(space: &'a SearchSpace, evaluator: &'a dyn Evaluator, cutoff: Duration) -> Self {
        Self {
            space,
            evaluator,
            cutoff,
            history: Vec::new(),
            training: TrainingSet::new(),
            evaluated_keys: HashSet::new(),
            warnings: Vec::new(),
            truncated: false,
        }
    }

    fn evaluate(&mut self, pipeline: Pipeline) -> &EvaluationRecord {
        let out = evaluate_with_cutoff(self.evaluator, &pipeline, self.cutoff);
        let record = EvaluationRecord {
            reward: out.reward,
            status: out.status,
            duration: out.duration,
            walk_index: self.history.len(),
            noiseless: out.noiseless,
            pipeline,
        };
        self.training.push(self.space.encode(&record.pipeline), record.reward);
        self.evaluated_keys.insert(record.pipeline.key());
        self.history.push(record);
        self.history.last().unwrap()
    }

    fn global_best(&self) -> f64 {
        self.history.iter().map(|r| r.reward).fold(0.0, f64::max)
    }

    /// Best ok-status evaluation compatible with `prefix` (earliest on ties).
    fn incumbent_in(&self, prefix: &PipelinePrefix) -> Option<(Pipeline, f64)> {
        self.history
            .iter()
            .filter(|r| r.status == Status::Ok && prefix.compatible(&r.pipeline))
            .fold(None, |acc: Option<&EvaluationRecord>, r| match acc {
                Some(best) if best.reward >= r.reward => Some(best),
                _ => Some(r),
            })
            .map(|r| (r.pipeline.clone(), r.reward))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Driver {
    Mosaic,
    BoOnly,
}

pub fn run(
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    params: &OptimizerParams,
) -> Result<OptimizationResult, OptimizerError> {
    run_with_driver(space, evaluator, params, Driver::Mosaic)
}

pub(crate) fn run_with_driver(
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    params: &OptimizerParams,
    driver: Driver,
) -> Result<OptimizationResult, OptimizerError> {
    let report = space.validate();
    if !report.is_empty() {
        return Err(OptimizerError::InvalidSpace(report));
    }
    params.search.validate().map_err(OptimizerError::InvalidParams)?;
    params.budget.validate().map_err(OptimizerError::InvalidParams)?;

    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut st = RunState::new(space, evaluator, params.eval_cutoff);

    match &params.init_mode {
        InitMode::Vanilla => {
            vanilla_init(&mut st, params.kappa, &BTreeSet::new(), &params.budget, start, &mut rng)?
        }
        InitMode::MetaLearning { k, archive, meta } => {
            metalearning_init(&mut st, *k, archive, meta, params.kappa, &params.budget, start, &mut rng)?
        }
    }

    if st.truncated {
        return Ok(assemble(st, params));
    }
    if st.history.iter().all(|r| r.status != Status::Ok) {
        return Err(OptimizerError::InitializationFailed);
    }
    // degenerate spaces can finish initialization with a single record; the
    // forest needs two
    while st.training.len() < 2 {
        if !params.budget.allows(st.history.len(), start.elapsed()) {
            st.truncated = true;
            return Ok(assemble(st, params));
        }
        let x = space.sample_default(&PipelinePrefix::empty(), &mut rng)?;
        st.evaluate(x);
    }

    let forest_params = ForestParams::default();
    let mut model = SurrogateForest::fit(&st.training, &forest_params, &mut rng)?;
    let mut generation: u64 = 0;

    // per-action estimates at the root, part of the initialization contract;
    // computing them in every driver also keeps their rng streams aligned
    let empty = PipelinePrefix::empty();
    for a in space.admissible_extensions(&empty) {
        let _ = surrogate::q_hat(&model, space, &empty, &a, params.search.n_s, &mut rng)?;
    }

    let mut tree = MctsTree::new(space);
    while params.budget.allows(st.history.len(), start.elapsed()) {
        match driver {
            Driver::Mosaic => {
                let (path, candidate) = tree.walk_to_candidate(
                    &model,
                    space,
                    &params.search,
                    generation,
                    |prefix| st.incumbent_in(prefix),
                    st.global_best(),
                    &st.evaluated_keys,
                    &mut rng,
                )?;
                let reward = st.evaluate(candidate).reward;
                tree.backpropagate(&path, reward);
            }
            Driver::BoOnly => {
                let incumbent = st.incumbent_in(&empty);
                let global_best = st.global_best();
                let candidate = mcts::playout(
                    &empty,
                    &model,
                    space,
                    incumbent.as_ref().map(|(x, r)| (x, *r)),
                    global_best,
                    &st.evaluated_keys,
                    &params.search,
                    &mut rng,
                )?;
                st.evaluate(candidate);
            }
        }
        model = SurrogateForest::fit(&st.training, &forest_params, &mut rng)?;
        generation += 1;
    }

    Ok(assemble(st, params))
}

/// Evaluates, for each uncovered step-1 algorithm, its default pipeline plus
/// `kappa` draws from the default distribution over its subtree.
fn vanilla_init(
    st: &mut RunState,
    kappa: usize,
    covered: &BTreeSet<String>,
    budget: &Budget,
    start: Instant,
    rng: &mut ChaCha8Rng,
) -> Result<(), OptimizerError> {
    let empty = PipelinePrefix::empty();
    for a in st.space.admissible_extensions(&empty) {
        if covered.contains(&a) {
            continue;
        }
        let prefix = empty.child(&a);
        if !budget.allows(st.history.len(), start.elapsed()) {
            st.truncated = true;
            return Ok(());
        }
        match st.space.default_pipeline(&a) {
            Ok(x) => {
                st.evaluate(x);
            }
            Err(e) => {
                st.warnings
                    .push(format!("default pipeline for `{a}` unusable ({e}); sampled instead"));
                let x = st.space.sample_default(&prefix, rng)?;
                st.evaluate(x);
            }
        }
        for _ in 0..kappa {
            if !budget.allows(st.history.len(), start.elapsed()) {
                st.truncated = true;
                return Ok(());
            }
            let x = st.space.sample_default(&prefix, rng)?;
            st.evaluate(x);
        }
    }
    Ok(())
}

/// Evaluates the recorded best pipelines of the `k` nearest archive
/// datasets (deduplicated, invalid ones skipped with a warning), then tops
/// up with the plain initialization for step-1 algorithms not yet covered.
fn metalearning_init(
    st: &mut RunState,
    k: usize,
    archive: &Archive,
    meta: &MetaFeatures,
    kappa: usize,
    budget: &Budget,
    start: Instant,
    rng: &mut ChaCha8Rng,
) -> Result<(), OptimizerError> {
    let mut covered = BTreeSet::new();
    if archive.entries.is_empty() {
        st.warnings
            .push("warm-start archive is empty; falling back to plain initialization".to_string());
    } else {
        let mut seen = BTreeSet::new();
        for entry in nearest_datasets(archive, meta, k)? {
            if !seen.insert(entry.pipeline.key()) {
                continue;
            }
            if let Err(e) = st.space.check_pipeline(&entry.pipeline) {
                st.warnings
                    .push(format!("archive pipeline from `{}` skipped: {e}", entry.id));
                continue;
            }
            if !budget.allows(st.history.len(), start.elapsed()) {
                st.truncated = true;
                return Ok(());
            }
            let record = st.evaluate(entry.pipeline.clone());
            covered.insert(record.pipeline.structure[0].clone());
        }
    }
    vanilla_init(st, kappa, &covered, budget, start, rng)
}

/// Plain initialization as a standalone operation: evaluates every step-1
/// algorithm's default pipeline plus `kappa` subtree samples, fits the first
/// surrogate, and estimates the per-action values at the root.
#[allow(clippy::type_complexity)]
pub fn initialize_vanilla(
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    kappa: usize,
    cutoff: Duration,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<EvaluationRecord>, SurrogateForest, Vec<(String, f64)>), OptimizerError> {
    let mut st = RunState::new(space, evaluator, cutoff);
    let budget = Budget {
        max_evaluations: None,
        max_wall_clock: None,
    };
    vanilla_init(&mut st, kappa, &BTreeSet::new(), &budget, Instant::now(), rng)?;
    if st.history.iter().all(|r| r.status != Status::Ok) {
        return Err(OptimizerError::InitializationFailed);
    }
    let model = SurrogateForest::fit(&st.training, &ForestParams::default(), rng)?;
    let empty = PipelinePrefix::empty();
    let root_q = space
        .admissible_extensions(&empty)
        .into_iter()
        .map(|a| {
            let q = surrogate::q_hat(&model, space, &empty, &a, SearchParams::default().n_s, rng)?;
            Ok((a, q))
        })
        .collect::<Result<Vec<_>, OptimizerError>>()?;
    Ok((st.history, model, root_q))
}

/// Warm-started initialization as a standalone operation. Returns the
/// records and any warnings (skipped pipelines, empty-archive fallback).
pub fn initialize_metalearning(
    archive: &Archive,
    meta: &MetaFeatures,
    k: usize,
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    kappa: usize,
    cutoff: Duration,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<EvaluationRecord>, Vec<String>), OptimizerError> {
    let mut st = RunState::new(space, evaluator, cutoff);
    let budget = Budget {
        max_evaluations: None,
        max_wall_clock: None,
    };
    metalearning_init(&mut st, k, archive, meta, kappa, &budget, Instant::now(), rng)?;
    Ok((st.history, st.warnings))
}

fn assemble(mut st: RunState, params: &OptimizerParams) -> OptimizationResult {
    let mut curve = Vec::with_capacity(st.history.len());
    let mut best_so_far = f64::NEG_INFINITY;
    let mut best_index = 0;
    for r in &st.history {
        if r.reward > best_so_far {
            best_so_far = r.reward;
            best_index = r.walk_index;
        }
        curve.push((r.walk_index, best_so_far));
    }
    let ensemble_weights = if params.ensemble {
        build_run_ensemble(&mut st, params.ensemble_max_size)
    } else {
        None
    };
    OptimizationResult {
        best: st.history[best_index].clone(),
        history: st.history,
        incumbent_curve: curve,
        ensemble_weights,
        truncated: st.truncated,
        warnings: st.warnings,
    }
}

/// Greedy ensemble over all successful evaluations, weights re-keyed to
/// history indices. Degrades to `None` with a warning when the evaluator
/// exposes no validation predictions.
fn build_run_ensemble(st: &mut RunState, max_size: usize) -> Option<EnsembleWeights> {
    let Some(targets) = st.evaluator.validation_targets() else {
        st.warnings
            .push("ensemble requested but the evaluator exposes no validation targets".to_string());
        return None;
    };
    let mut rows = Vec::new();
    let mut indices = Vec::new();
    for r in &st.history {
        if r.status != Status::Ok {
            continue;
        }
        if let Some(preds) = st.evaluator.validation_predictions(&r.pipeline) {
            rows.push(preds);
            indices.push(r.walk_index);
        }
    }
    if rows.is_empty() {
        st.warnings
            .push("ensemble requested but no evaluation yielded validation predictions".to_string());
        return None;
    }
    let matrix = PredictionMatrix { rows, targets };
    match ensemble::build_ensemble(&matrix, max_size) {
        Ok(w) => Some(EnsembleWeights {
            weights: w.weights.into_iter().map(|(i, v)| (indices[i], v)).collect(),
            size: w.size,
        }),
        Err(e) => {
            st.warnings.push(format!("ensemble construction failed: {e}"));
            None
        }
    }
}
