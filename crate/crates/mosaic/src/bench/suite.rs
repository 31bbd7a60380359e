//! Built-in synthetic benchmark problems with known optima.
//!
//! Every problem plants a target pipeline at objective value 1.0 and charges
//! penalties for wrong structural choices and for hyperparameter distance to
//! the target along the planted structure. Observation noise, when enabled,
//! is Gaussian and clipped to [0,1]; the noise-free value travels in a hidden
//! log field that the optimizers never see.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Duration;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::meta::{Archive, ArchiveEntry, MetaFeatures};
use crate::optimizer::{EvalOutcome, Evaluator};
use crate::space::{
    AlgorithmChoice, Condition, DecisionStep, ForbiddenPattern, HyperparameterSpec, ParamKind,
    ParamValue, Pipeline, SearchSpace,
};

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("unknown suite `{0}`; available suites: desk100")]
    UnknownSuite(String),
}

/// Distance term charged for one hyperparameter when the pipeline follows
/// the planted structure at that step.
#[derive(Debug, Clone)]
enum HpTerm {
    /// Per-value penalty table, zero at the target value.
    Cat { penalties: BTreeMap<String, f64> },
    /// `weight · |normalized(v) − target|`.
    Numeric { lo: f64, span: f64, target: f64, weight: f64 },
}

impl HpTerm {
    fn penalty(&self, v: &ParamValue) -> f64 {
        match (self, v) {
            (HpTerm::Cat { penalties }, ParamValue::Cat(s)) => penalties.get(s).copied().unwrap_or(0.0),
            (HpTerm::Numeric { lo, span, target, weight }, ParamValue::Int(i)) => {
                weight * ((*i as f64 - lo) / span - target).abs()
            }
            (HpTerm::Numeric { lo, span, target, weight }, ParamValue::Float(x)) => {
                weight * ((x - lo) / span - target).abs()
            }
            _ => 0.0,
        }
    }
}

/// Deterministic objective: 1 minus structural penalties (for steps leaving
/// the planted structure) minus hyperparameter distances (along it), clamped
/// at 0. The planted pipeline is the unique maximizer at exactly 1.0.
#[derive(Debug, Clone)]
pub struct SyntheticObjective {
    target: Pipeline,
    structure_penalty: Vec<BTreeMap<String, f64>>,
    hp_terms: Vec<BTreeMap<String, HpTerm>>,
}

impl SyntheticObjective {
    pub fn value(&self, x: &Pipeline) -> f64 {
        let mut pen = 0.0;
        for (i, alg) in x.structure.iter().enumerate() {
            if *alg != self.target.structure[i] {
                pen += self.structure_penalty[i].get(alg).copied().unwrap_or(0.3);
            } else {
                for (name, v) in &x.theta[i] {
                    if let Some(term) = self.hp_terms[i].get(name) {
                        pen += term.penalty(v);
                    }
                }
            }
        }
        (1.0 - pen).max(0.0)
    }

    pub fn target(&self) -> &Pipeline {
        &self.target
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticProblem {
    pub dataset_id: String,
    pub space: SearchSpace,
    pub objective: SyntheticObjective,
    pub noise_std: f64,
    pub known_optimum: Option<(Pipeline, f64)>,
}

impl SyntheticProblem {
    pub fn is_fully_discrete(&self) -> bool {
        self.space.steps.iter().all(|s| {
            s.algorithms.iter().all(|a| {
                a.hyperparameters
                    .iter()
                    .all(|h| !matches!(h.kind, ParamKind::Continuous(_, _)))
            })
        })
    }

    /// All pipelines of a fully discrete space without conditional
    /// hyperparameters; `None` otherwise.
    pub fn enumerate(&self) -> Option<Vec<Pipeline>> {
        if !self.is_fully_discrete() {
            return None;
        }
        let conditional = self
            .space
            .steps
            .iter()
            .any(|s| s.algorithms.iter().any(|a| a.hyperparameters.iter().any(|h| h.condition.is_some())));
        if conditional {
            return None;
        }
        let mut out = Vec::new();
        for structure in self.space.enumerate_structures() {
            let thetas: Vec<Vec<crate::space::ThetaMap>> = structure
                .iter()
                .enumerate()
                .map(|(i, alg_name)| {
                    let alg = self.space.algorithm(i, alg_name).expect("enumerated from space");
                    let mut step_maps = vec![BTreeMap::new()];
                    for spec in &alg.hyperparameters {
                        let values: Vec<ParamValue> = match &spec.kind {
                            ParamKind::Categorical(vs) => {
                                vs.iter().map(|v| ParamValue::Cat(v.clone())).collect()
                            }
                            ParamKind::Integer(lo, hi) => (*lo..=*hi).map(ParamValue::Int).collect(),
                            ParamKind::Continuous(_, _) => unreachable!("discrete space"),
                        };
                        step_maps = step_maps
                            .into_iter()
                            .flat_map(|m| {
                                values.iter().map(move |v| {
                                    let mut m2 = m.clone();
                                    m2.insert(spec.name.clone(), v.clone());
                                    m2
                                })
                            })
                            .collect();
                    }
                    step_maps
                })
                .collect();
            let mut combos: Vec<Vec<crate::space::ThetaMap>> = vec![Vec::new()];
            for step_maps in thetas {
                combos = combos
                    .into_iter()
                    .flat_map(|c| {
                        step_maps.iter().map(move |m| {
                            let mut c2 = c.clone();
                            c2.push(m.clone());
                            c2
                        })
                    })
                    .collect();
            }
            for theta in combos {
                out.push(Pipeline {
                    structure: structure.clone(),
                    theta,
                });
            }
        }
        Some(out)
    }

    /// Evaluator instance for one run; the observation-noise stream is
    /// derived from the problem identity and `run_seed`.
    pub fn evaluator(&self, run_seed: u64) -> SyntheticEvaluator {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for b in self.dataset_id.bytes() {
            h = (h ^ b as u64).wrapping_mul(0x1000_0000_01b3);
        }
        SyntheticEvaluator {
            objective: self.objective.clone(),
            noise_std: self.noise_std,
            noise: Mutex::new(ChaCha8Rng::seed_from_u64(h ^ run_seed)),
            n_validation: 16,
        }
    }
}

pub struct SyntheticEvaluator {
    objective: SyntheticObjective,
    noise_std: f64,
    noise: Mutex<ChaCha8Rng>,
    n_validation: usize,
}

fn key_hash(key: &str, salt: u64) -> f64 {
    let mut h = 0x9e37_79b9_7f4a_7c15u64 ^ salt;
    for b in key.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 29;
    }
    (h >> 11) as f64 / (1u64 << 53) as f64
}

impl Evaluator for SyntheticEvaluator {
    fn evaluate(&self, pipeline: &Pipeline, _cutoff: Duration) -> EvalOutcome {
        let noiseless = self.objective.value(pipeline);
        let reward = if self.noise_std > 0.0 {
            let draw = {
                let mut rng = self.noise.lock().unwrap();
                Normal::new(0.0, self.noise_std).unwrap().sample(&mut *rng)
            };
            (noiseless + draw).clamp(0.0, 1.0)
        } else {
            noiseless
        };
        EvalOutcome {
            reward,
            status: crate::optimizer::Status::Ok,
            duration: 0.0,
            noiseless: Some(noiseless),
        }
    }

    /// Fabricated two-class probabilities: instance `i` is classified
    /// correctly when a deterministic per-(pipeline, instance) draw falls
    /// below the pipeline's noise-free objective value.
    fn validation_predictions(&self, pipeline: &Pipeline) -> Option<Vec<Vec<f64>>> {
        let quality = self.objective.value(pipeline);
        let key = pipeline.key();
        let targets = self.validation_targets().unwrap();
        Some(
            (0..self.n_validation)
                .map(|i| {
                    let correct = key_hash(&key, i as u64) < quality;
                    let predicted = if correct { targets[i] } else { 1 - targets[i] };
                    if predicted == 0 {
                        vec![0.8, 0.2]
                    } else {
                        vec![0.2, 0.8]
                    }
                })
                .collect(),
        )
    }

    fn validation_targets(&self) -> Option<Vec<usize>> {
        Some((0..self.n_validation).map(|i| i % 2).collect())
    }
}

pub const META_FEATURE_NAMES: [&str; 7] = [
    "depth",
    "n_structures",
    "encoding_dim",
    "noise_std",
    "n_categorical",
    "n_integer",
    "n_continuous",
];

pub fn meta_features(problem: &SyntheticProblem) -> MetaFeatures {
    let mut counts = [0usize; 3];
    for step in &problem.space.steps {
        for alg in &step.algorithms {
            for h in &alg.hyperparameters {
                match h.kind {
                    ParamKind::Categorical(_) => counts[0] += 1,
                    ParamKind::Integer(_, _) => counts[1] += 1,
                    ParamKind::Continuous(_, _) => counts[2] += 1,
                }
            }
        }
    }
    MetaFeatures {
        values: vec![
            problem.space.depth() as f64,
            problem.space.enumerate_structures().len() as f64,
            problem.space.encoding_dim() as f64,
            problem.noise_std,
            counts[0] as f64,
            counts[1] as f64,
            counts[2] as f64,
        ],
    }
}

pub fn make_suite(suite_name: &str, seed: u64) -> Result<Vec<SyntheticProblem>, SuiteError> {
    match suite_name {
        "desk100" => Ok(make_desk100(seed)),
        other => Err(SuiteError::UnknownSuite(other.to_string())),
    }
}

// -------- space builders --------

fn cat_hp(name: &str, values: &[&str]) -> HyperparameterSpec {
    HyperparameterSpec {
        name: name.to_string(),
        kind: ParamKind::Categorical(values.iter().map(|v| v.to_string()).collect()),
        condition: None,
        bias: None,
    }
}

fn int_hp(name: &str, lo: i64, hi: i64) -> HyperparameterSpec {
    HyperparameterSpec {
        name: name.to_string(),
        kind: ParamKind::Integer(lo, hi),
        condition: None,
        bias: None,
    }
}

fn cont_hp(name: &str, lo: f64, hi: f64) -> HyperparameterSpec {
    HyperparameterSpec {
        name: name.to_string(),
        kind: ParamKind::Continuous(lo, hi),
        condition: None,
        bias: None,
    }
}

fn conditional(mut spec: HyperparameterSpec, parent: &str, values: &[ParamValue]) -> HyperparameterSpec {
    spec.condition = Some(Condition {
        parent: parent.to_string(),
        values: values.to_vec(),
    });
    spec
}

fn alg(name: &str, hyperparameters: Vec<HyperparameterSpec>, defaults: &[(&str, ParamValue)]) -> AlgorithmChoice {
    AlgorithmChoice {
        name: name.to_string(),
        default_theta: defaults.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        hyperparameters,
    }
}

fn step(index: usize, algorithms: Vec<AlgorithmChoice>) -> DecisionStep {
    DecisionStep { index, algorithms }
}

fn disc_a_space() -> SearchSpace {
    let model = |name: &str| {
        alg(
            name,
            vec![cat_hp("c", &["c1", "c2", "c3", "c4"]), int_hp("k", 1, 3)],
            &[("c", ParamValue::Cat("c1".into())), ("k", ParamValue::Int(1))],
        )
    };
    SearchSpace::new(
        "disc-a",
        vec![
            step(1, vec![model("m1"), model("m2")]),
            step(2, vec![alg("p1", vec![], &[]), alg("p2", vec![], &[])]),
        ],
        vec![],
    )
}

fn disc_b_space() -> SearchSpace {
    let s1 = |name: &str| alg(name, vec![int_hp("n", 0, 3)], &[("n", ParamValue::Int(0))]);
    let s2 = |name: &str| {
        alg(
            name,
            vec![cat_hp("t", &["t1", "t2", "t3"])],
            &[("t", ParamValue::Cat("t1".into()))],
        )
    };
    SearchSpace::new(
        "disc-b",
        vec![
            step(1, vec![s1("a1"), s1("a2")]),
            step(2, vec![s2("b1"), s2("b2")]),
            step(3, vec![alg("c1", vec![], &[]), alg("c2", vec![], &[])]),
        ],
        vec![ForbiddenPattern(vec![(1, "a2".into()), (3, "c2".into())])],
    )
}

fn mix_c_space() -> SearchSpace {
    let s1 = |name: &str| {
        alg(
            name,
            vec![
                cont_hp("x", 0.0, 1.0),
                cat_hp("mode", &["lo", "hi"]),
                conditional(cont_hp("y", 0.0, 1.0), "mode", &[ParamValue::Cat("hi".into())]),
            ],
            &[
                ("x", ParamValue::Float(0.5)),
                ("mode", ParamValue::Cat("lo".into())),
                ("y", ParamValue::Float(0.5)),
            ],
        )
    };
    let s2 = |name: &str| {
        alg(
            name,
            vec![cont_hp("z", 0.0, 1.0), int_hp("k", 0, 9)],
            &[("z", ParamValue::Float(0.5)), ("k", ParamValue::Int(0))],
        )
    };
    SearchSpace::new(
        "mix-c",
        vec![
            step(1, vec![s1("f1"), s1("f2"), s1("f3")]),
            step(2, vec![s2("g1"), s2("g2")]),
        ],
        vec![],
    )
}

fn mix_d_space() -> SearchSpace {
    let h = |name: &str| {
        alg(
            name,
            vec![cont_hp("u", 0.0, 1.0), cont_hp("v", 0.0, 1.0)],
            &[("u", ParamValue::Float(0.5)), ("v", ParamValue::Float(0.5))],
        )
    };
    SearchSpace::new(
        "mix-d",
        vec![
            step(
                1,
                vec![
                    alg(
                        "deep",
                        vec![cont_hp("x1", 0.0, 1.0), cont_hp("x2", 0.0, 1.0)],
                        &[("x1", ParamValue::Float(0.05)), ("x2", ParamValue::Float(0.05))],
                    ),
                    alg("shallow", vec![cont_hp("w", 0.0, 1.0)], &[("w", ParamValue::Float(0.5))]),
                ],
            ),
            step(2, vec![h("h1"), h("h2")]),
        ],
        vec![],
    )
}

fn mix_e_space() -> SearchSpace {
    let s1 = |name: &str| {
        alg(
            name,
            vec![
                cont_hp("a", 0.0, 1.0),
                cat_hp("gate", &["off", "on"]),
                conditional(cont_hp("b", 0.0, 1.0), "gate", &[ParamValue::Cat("on".into())]),
            ],
            &[
                ("a", ParamValue::Float(0.5)),
                ("gate", ParamValue::Cat("off".into())),
                ("b", ParamValue::Float(0.5)),
            ],
        )
    };
    let s2 = |name: &str| alg(name, vec![cont_hp("c", 0.0, 1.0)], &[("c", ParamValue::Float(0.5))]);
    SearchSpace::new(
        "mix-e",
        vec![
            step(1, vec![s1("r1"), s1("r2")]),
            step(2, vec![s2("s1"), s2("s2"), s2("s3")]),
            step(3, vec![alg("t1", vec![int_hp("d", 0, 7)], &[("d", ParamValue::Int(0))]), alg("t2", vec![int_hp("d", 0, 7)], &[("d", ParamValue::Int(0))])]),
        ],
        vec![ForbiddenPattern(vec![(2, "s3".into()), (3, "t2".into())])],
    )
}

/// A mixed hierarchical space with conditionals and a forbidden pattern,
/// reused by property tests across the crate.
#[cfg(test)]
pub(crate) fn mixed_space_for_tests() -> SearchSpace {
    mix_e_space()
}

// -------- objective builders --------

struct ObjectiveBuilder<'a> {
    space: &'a SearchSpace,
    target: &'a Pipeline,
    rng: ChaCha8Rng,
}

impl<'a> ObjectiveBuilder<'a> {
    fn new(space: &'a SearchSpace, target: &'a Pipeline, seed_rng: &mut ChaCha8Rng) -> Self {
        Self {
            space,
            target,
            rng: ChaCha8Rng::seed_from_u64(seed_rng.random()),
        }
    }

    /// Penalties drawn uniformly: wrong structural choices in
    /// `structure_range`, hyperparameter weights in `hp_range`. Overrides
    /// replace the drawn penalty for specific (step, algorithm) pairs.
    fn build(
        mut self,
        structure_range: (f64, f64),
        hp_range: (f64, f64),
        overrides: &[(usize, &str, f64)],
    ) -> SyntheticObjective {
        let mut structure_penalty = Vec::new();
        let mut hp_terms = Vec::new();
        for (i, st) in self.space.steps.iter().enumerate() {
            let mut pens = BTreeMap::new();
            for a in &st.algorithms {
                if a.name != self.target.structure[i] {
                    let p = overrides
                        .iter()
                        .find(|(s, n, _)| *s == i && *n == a.name)
                        .map(|(_, _, p)| *p)
                        .unwrap_or_else(|| self.rng.random_range(structure_range.0..structure_range.1));
                    pens.insert(a.name.clone(), p);
                }
            }
            structure_penalty.push(pens);

            let mut terms = BTreeMap::new();
            let alg = self
                .space
                .algorithm(i, &self.target.structure[i])
                .expect("target lies in the space");
            for spec in &alg.hyperparameters {
                let Some(tv) = self.target.theta[i].get(&spec.name) else {
                    continue; // inactive on the target: no distance term
                };
                let weight = self.rng.random_range(hp_range.0..hp_range.1);
                let term = match &spec.kind {
                    ParamKind::Categorical(vals) => {
                        let ParamValue::Cat(tv) = tv else { unreachable!() };
                        let penalties = vals
                            .iter()
                            .filter(|v| *v != tv)
                            .map(|v| (v.clone(), weight * self.rng.random_range(0.4..1.0)))
                            .collect();
                        HpTerm::Cat { penalties }
                    }
                    ParamKind::Integer(lo, hi) => {
                        let ParamValue::Int(t) = tv else { unreachable!() };
                        HpTerm::Numeric {
                            lo: *lo as f64,
                            span: (*hi - *lo) as f64,
                            target: (*t - *lo) as f64 / (*hi - *lo) as f64,
                            weight,
                        }
                    }
                    ParamKind::Continuous(lo, hi) => {
                        let ParamValue::Float(t) = tv else { unreachable!() };
                        HpTerm::Numeric {
                            lo: *lo,
                            span: *hi - *lo,
                            target: (*t - *lo) / (*hi - *lo),
                            weight,
                        }
                    }
                };
                terms.insert(spec.name.clone(), term);
            }
            hp_terms.push(terms);
        }
        SyntheticObjective {
            target: self.target.clone(),
            structure_penalty,
            hp_terms,
        }
    }
}

fn pipeline(space: &SearchSpace, structure: &[&str], theta: &[&[(&str, ParamValue)]]) -> Pipeline {
    let x = Pipeline {
        structure: structure.iter().map(|s| s.to_string()).collect(),
        theta: theta
            .iter()
            .map(|m| m.iter().map(|(k, v)| (k.to_string(), v.clone())).collect())
            .collect(),
    };
    space.check_pipeline(&x).expect("planted pipeline is valid");
    x
}

fn make_desk100(seed: u64) -> Vec<SyntheticProblem> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut problems = Vec::new();

    // two discrete sisters on a shared space and planted optimum
    let space_a = disc_a_space();
    let target_a = pipeline(
        &space_a,
        &["m2", "p2"],
        &[
            &[("c", ParamValue::Cat("c3".into())), ("k", ParamValue::Int(2))],
            &[],
        ],
    );
    for suffix in ["1", "2"] {
        let objective = ObjectiveBuilder::new(&space_a, &target_a, &mut master).build((0.15, 0.4), (0.1, 0.25), &[]);
        problems.push(SyntheticProblem {
            dataset_id: format!("disc-a{suffix}"),
            space: space_a.clone(),
            known_optimum: Some((target_a.clone(), 1.0)),
            objective,
            noise_std: 0.0,
        });
    }

    // two discrete sisters where the planted step-1 algorithm has a poor
    // default (n = 0 versus the planted n = 5)
    let space_b = disc_b_space();
    let target_b = pipeline(
        &space_b,
        &["a1", "b2", "c2"],
        &[
            &[("n", ParamValue::Int(3))],
            &[("t", ParamValue::Cat("t2".into()))],
            &[],
        ],
    );
    for suffix in ["1", "2"] {
        let objective = ObjectiveBuilder::new(&space_b, &target_b, &mut master).build(
            (0.2, 0.4),
            (0.3, 0.45),
            &[(0, "a2", 0.12)],
        );
        problems.push(SyntheticProblem {
            dataset_id: format!("disc-b{suffix}"),
            space: space_b.clone(),
            known_optimum: Some((target_b.clone(), 1.0)),
            objective,
            noise_std: 0.0,
        });
    }

    // mixed hierarchical sisters with a conditional hyperparameter on the
    // planted path; `f1` is a deceptive branch capped at 0.88 that is flat
    // in its own hyperparameters, so committing to the right branch matters
    let space_c = mix_c_space();
    let target_c = pipeline(
        &space_c,
        &["f2", "g1"],
        &[
            &[
                ("x", ParamValue::Float(0.62)),
                ("mode", ParamValue::Cat("hi".into())),
                ("y", ParamValue::Float(0.37)),
            ],
            &[("z", ParamValue::Float(0.28)), ("k", ParamValue::Int(7))],
        ],
    );
    for suffix in ["1", "2"] {
        let objective = ObjectiveBuilder::new(&space_c, &target_c, &mut master).build(
            (0.18, 0.35),
            (0.15, 0.28),
            &[(0, "f1", 0.12)],
        );
        problems.push(SyntheticProblem {
            dataset_id: format!("mix-c{suffix}"),
            space: space_c.clone(),
            known_optimum: Some((target_c.clone(), 1.0)),
            objective,
            noise_std: 0.0,
        });
    }

    // deceptive sisters: `deep` hosts the optimum but its default scores far
    // below the flat `shallow` plateau; the second sister observes noise
    let space_d = mix_d_space();
    let target_d = pipeline(
        &space_d,
        &["deep", "h1"],
        &[
            &[("x1", ParamValue::Float(0.9)), ("x2", ParamValue::Float(0.85))],
            &[("u", ParamValue::Float(0.33)), ("v", ParamValue::Float(0.71))],
        ],
    );
    for (suffix, noise) in [("1", 0.0), ("2", 0.02)] {
        let objective = ObjectiveBuilder::new(&space_d, &target_d, &mut master).build(
            (0.2, 0.35),
            (0.25, 0.4),
            &[(0, "shallow", 0.15)],
        );
        problems.push(SyntheticProblem {
            dataset_id: format!("mix-d{suffix}"),
            space: space_d.clone(),
            known_optimum: Some((target_d.clone(), 1.0)),
            objective,
            noise_std: noise,
        });
    }

    // three-step sisters with a forbidden pattern and a flat deceptive
    // plateau under `r1`; the second observes noise
    let space_e = mix_e_space();
    let target_e = pipeline(
        &space_e,
        &["r2", "s1", "t1"],
        &[
            &[
                ("a", ParamValue::Float(0.15)),
                ("gate", ParamValue::Cat("on".into())),
                ("b", ParamValue::Float(0.8)),
            ],
            &[("c", ParamValue::Float(0.55))],
            &[("d", ParamValue::Int(6))],
        ],
    );
    for (suffix, noise) in [("1", 0.0), ("2", 0.015)] {
        let objective = ObjectiveBuilder::new(&space_e, &target_e, &mut master).build(
            (0.18, 0.35),
            (0.15, 0.28),
            &[(0, "r1", 0.12)],
        );
        problems.push(SyntheticProblem {
            dataset_id: format!("mix-e{suffix}"),
            space: space_e.clone(),
            known_optimum: Some((target_e.clone(), 1.0)),
            objective,
            noise_std: noise,
        });
    }

    problems
}

/// Runs the search on every suite problem and stores each best pipeline with
/// the problem's meta-features, yielding the warm-start archive.
pub fn build_archive(
    problems: &[SyntheticProblem],
    budget: usize,
    seed: u64,
) -> Result<Archive, crate::optimizer::OptimizerError> {
    let mut entries = Vec::new();
    for p in problems {
        let evaluator = p.evaluator(seed);
        let params = crate::optimizer::OptimizerParams::new(
            crate::optimizer::Budget::evaluations(budget),
            seed,
        );
        let result = crate::optimizer::run(&p.space, &evaluator, &params)?;
        entries.push(ArchiveEntry {
            id: p.dataset_id.clone(),
            meta: meta_features(p).values,
            pipeline: result.best.pipeline,
            reward: result.best.reward,
        });
    }
    Ok(Archive {
        feature_names: META_FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        entries,
    })
}
