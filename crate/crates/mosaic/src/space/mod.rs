//! Hierarchical pipeline search spaces.
//!
//! A space is an ordered sequence of decision steps. Each step offers a set
//! of algorithms, each algorithm carries its own (possibly conditional)
//! hyperparameter subspace. Structures can be pruned early through forbidden
//! (step, algorithm)-pair patterns.

mod encode;
mod json;
mod neighbors;
mod sample;

pub use json::{load_space, save_space, space_from_json, space_to_json, SpaceFileError};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

/// A single hyperparameter value. Serialized as a bare JSON string/number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Cat(String),
    Int(i64),
    Float(f64),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Cat(s) => write!(f, "{s}"),
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => write!(f, "{v}"),
        }
    }
}

/// Hyperparameter assignment for one pipeline step, keyed by spec name.
/// Only active hyperparameters appear.
pub type ThetaMap = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, PartialEq)]
pub enum ParamKind {
    Categorical(Vec<String>),
    Integer(i64, i64),
    Continuous(f64, f64),
}

/// Activation predicate: the hyperparameter is active iff the sibling
/// `parent` is itself active and takes one of `values`.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub parent: String,
    pub values: Vec<ParamValue>,
}

#[derive(Debug, Clone)]
pub struct HyperparameterSpec {
    pub name: String,
    pub kind: ParamKind,
    pub condition: Option<Condition>,
    /// Optional weight table for non-uniform default sampling, keyed by the
    /// value's string form. Only meaningful for categorical/integer kinds.
    pub bias: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone)]
pub struct AlgorithmChoice {
    pub name: String,
    pub default_theta: ThetaMap,
    pub hyperparameters: Vec<HyperparameterSpec>,
}

#[derive(Debug, Clone)]
pub struct DecisionStep {
    /// 1-based position in the pipeline.
    pub index: usize,
    pub algorithms: Vec<AlgorithmChoice>,
}

/// One forbidden pattern: a set of (1-based step, algorithm) pairs. A prefix
/// matches the pattern once it covers every listed step with the listed
/// algorithm; matching prefixes and all their completions are inadmissible.
#[derive(Debug, Clone, PartialEq)]
pub struct ForbiddenPattern(pub Vec<(usize, String)>);

#[derive(Debug, Clone)]
pub struct SearchSpace {
    pub name: String,
    pub steps: Vec<DecisionStep>,
    pub forbidden: Vec<ForbiddenPattern>,
    pub(crate) layout: OnceLock<encode::Layout>,
}

/// A full configuration: one algorithm per step plus all active
/// hyperparameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub structure: Vec<String>,
    pub theta: Vec<ThetaMap>,
}

impl Pipeline {
    /// Canonical string form, usable as a dedup key (theta maps are ordered).
    pub fn key(&self) -> String {
        serde_json::to_string(self).expect("pipeline serializes")
    }
}

/// The first `k` structural decisions of a pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PipelinePrefix {
    pub decisions: Vec<String>,
}

impl PipelinePrefix {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(decisions: Vec<String>) -> Self {
        Self { decisions }
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn child(&self, action: &str) -> Self {
        let mut decisions = self.decisions.clone();
        decisions.push(action.to_string());
        Self { decisions }
    }

    /// True iff the first `k` structural decisions of `x` equal this prefix.
    pub fn compatible(&self, x: &Pipeline) -> bool {
        self.decisions.len() <= x.structure.len()
            && self
                .decisions
                .iter()
                .zip(&x.structure)
                .all(|(a, b)| a == b)
    }
}

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("dead-end prefix: no admissible completion of {0:?}")]
    DeadEndPrefix(Vec<String>),
    #[error("unknown algorithm `{name}` at step {step}")]
    UnknownAlgorithm { step: usize, name: String },
    #[error("inadmissible structure {structure:?}: matches forbidden pattern {pattern}")]
    Inadmissible {
        structure: Vec<String>,
        pattern: String,
    },
    #[error("invalid pipeline: {0}")]
    InvalidPipeline(String),
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
}

impl ParamKind {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ParamKind::Categorical(_) => "categorical",
            ParamKind::Integer(_, _) => "integer",
            ParamKind::Continuous(_, _) => "continuous",
        }
    }

    /// Whether `v` is a well-typed in-bounds member of the domain.
    pub fn contains(&self, v: &ParamValue) -> bool {
        match (self, v) {
            (ParamKind::Categorical(vals), ParamValue::Cat(s)) => vals.iter().any(|x| x == s),
            (ParamKind::Integer(lo, hi), ParamValue::Int(i)) => lo <= i && i <= hi,
            (ParamKind::Continuous(lo, hi), ParamValue::Float(x)) => {
                x.is_finite() && *lo <= *x && *x <= *hi
            }
            _ => false,
        }
    }
}

impl AlgorithmChoice {
    pub fn spec(&self, name: &str) -> Option<&HyperparameterSpec> {
        self.hyperparameters.iter().find(|s| s.name == name)
    }

    /// Resolves which hyperparameters are active under `theta`, walking specs
    /// in declaration order (conditions may only reference earlier specs).
    pub fn active_specs(&self, theta: &ThetaMap) -> Vec<bool> {
        let mut active = Vec::with_capacity(self.hyperparameters.len());
        for (i, spec) in self.hyperparameters.iter().enumerate() {
            let a = match &spec.condition {
                None => true,
                Some(cond) => {
                    let parent_idx = self
                        .hyperparameters
                        .iter()
                        .take(i)
                        .position(|s| s.name == cond.parent);
                    match parent_idx {
                        Some(p) if active[p] => theta
                            .get(&cond.parent)
                            .map(|v| cond.values.contains(v))
                            .unwrap_or(false),
                        _ => false,
                    }
                }
            };
            active.push(a);
        }
        active
    }

    /// Rebuilds a theta map holding exactly the active hyperparameters:
    /// values are taken from `raw` where present, from `default_theta`
    /// otherwise; inactive entries are dropped.
    pub fn normalize_theta(&self, raw: &ThetaMap) -> ThetaMap {
        let mut theta = ThetaMap::new();
        for (i, spec) in self.hyperparameters.iter().enumerate() {
            let a = match &spec.condition {
                None => true,
                Some(cond) => {
                    let parent_active = self
                        .hyperparameters
                        .iter()
                        .take(i)
                        .any(|s| s.name == cond.parent && theta.contains_key(&cond.parent));
                    parent_active && cond.values.contains(&theta[&cond.parent])
                }
            };
            if a {
                let v = raw
                    .get(&spec.name)
                    .or_else(|| self.default_theta.get(&spec.name))
                    .cloned();
                if let Some(v) = v {
                    theta.insert(spec.name.clone(), v);
                }
            }
        }
        theta
    }
}

impl SearchSpace {
    pub fn new(name: impl Into<String>, steps: Vec<DecisionStep>, forbidden: Vec<ForbiddenPattern>) -> Self {
        Self {
            name: name.into(),
            steps,
            forbidden,
            layout: OnceLock::new(),
        }
    }

    /// Number of decision steps (`ℓ`).
    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    pub fn algorithm(&self, step: usize, name: &str) -> Option<&AlgorithmChoice> {
        self.steps
            .get(step)
            .and_then(|s| s.algorithms.iter().find(|a| a.name == name))
    }

    fn require_algorithm(&self, step: usize, name: &str) -> Result<&AlgorithmChoice, SpaceError> {
        self.algorithm(step, name)
            .ok_or_else(|| SpaceError::UnknownAlgorithm {
                step: step + 1,
                name: name.to_string(),
            })
    }

    /// Whether `decisions` already matches a forbidden pattern (all of the
    /// pattern's steps fall inside the prefix and carry the listed choice).
    pub fn matches_forbidden(&self, decisions: &[String]) -> bool {
        self.forbidden.iter().any(|pat| {
            pat.0
                .iter()
                .all(|(step, alg)| *step >= 1 && *step <= decisions.len() && decisions[*step - 1] == *alg)
        })
    }

    /// Whether some admissible full structure extends `decisions`.
    pub fn has_admissible_completion(&self, decisions: &[String]) -> bool {
        if self.matches_forbidden(decisions) {
            return false;
        }
        if decisions.len() == self.depth() {
            return true;
        }
        let step = &self.steps[decisions.len()];
        let mut ext: Vec<String> = decisions.to_vec();
        for alg in &step.algorithms {
            ext.push(alg.name.clone());
            if self.has_admissible_completion(&ext) {
                return true;
            }
            ext.pop();
        }
        false
    }

    pub fn is_prefix_admissible(&self, prefix: &PipelinePrefix) -> bool {
        prefix.len() <= self.depth() && self.has_admissible_completion(&prefix.decisions)
    }

    /// Algorithm names at the next step that keep the prefix completable.
    pub fn admissible_extensions(&self, prefix: &PipelinePrefix) -> Vec<String> {
        if prefix.len() >= self.depth() {
            return Vec::new();
        }
        let step = &self.steps[prefix.len()];
        let mut ext = prefix.decisions.clone();
        let mut out = Vec::new();
        for alg in &step.algorithms {
            ext.push(alg.name.clone());
            if self.has_admissible_completion(&ext) {
                out.push(alg.name.clone());
            }
            ext.pop();
        }
        out
    }

    /// All admissible full structures, in lexicographic declaration order.
    pub fn enumerate_structures(&self) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        self.enum_rec(&mut cur, &mut out);
        out
    }

    fn enum_rec(&self, cur: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
        if self.matches_forbidden(cur) {
            return;
        }
        if cur.len() == self.depth() {
            out.push(cur.clone());
            return;
        }
        for alg in &self.steps[cur.len()].algorithms {
            cur.push(alg.name.clone());
            self.enum_rec(cur, out);
            cur.pop();
        }
    }

    /// Structural validation. An empty report means the space is usable;
    /// the optimizer refuses spaces with a nonempty report.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.steps.is_empty() {
            v.push("space has no decision steps".to_string());
        }
        for (si, step) in self.steps.iter().enumerate() {
            let where_ = format!("step {}", si + 1);
            if step.index != si + 1 {
                v.push(format!("{where_}: declared index {} out of order", step.index));
            }
            if step.algorithms.is_empty() {
                v.push(format!("{where_}: no algorithm choices"));
            }
            for (ai, alg) in step.algorithms.iter().enumerate() {
                if step.algorithms[..ai].iter().any(|a| a.name == alg.name) {
                    v.push(format!("{where_}: duplicate algorithm name `{}`", alg.name));
                }
                self.validate_algorithm(&where_, alg, &mut v);
            }
        }
        for (pi, pat) in self.forbidden.iter().enumerate() {
            for (step, alg) in &pat.0 {
                if *step < 1 || *step > self.depth() {
                    v.push(format!("forbidden pattern {pi}: step {step} out of range"));
                } else if self.algorithm(step - 1, alg).is_none() {
                    v.push(format!(
                        "forbidden pattern {pi}: unknown algorithm `{alg}` at step {step}"
                    ));
                }
            }
            if pat.0.is_empty() {
                v.push(format!("forbidden pattern {pi}: empty pattern forbids everything"));
            }
        }
        if v.is_empty() && self.enumerate_structures().is_empty() {
            v.push("no admissible structure: the forbidden patterns exclude every pipeline structure".to_string());
        }
        v
    }

    fn validate_algorithm(&self, where_: &str, alg: &AlgorithmChoice, v: &mut Vec<String>) {
        let ctx = format!("{where_}, algorithm `{}`", alg.name);
        for (i, spec) in alg.hyperparameters.iter().enumerate() {
            let sctx = format!("{ctx}, hyperparameter `{}`", spec.name);
            if alg.hyperparameters[..i].iter().any(|s| s.name == spec.name) {
                v.push(format!("{sctx}: duplicate name"));
            }
            match &spec.kind {
                ParamKind::Categorical(vals) => {
                    if vals.len() < 2 {
                        v.push(format!("{sctx}: categorical domain needs >= 2 values"));
                    }
                }
                ParamKind::Integer(lo, hi) => {
                    if lo >= hi {
                        v.push(format!("{sctx}: integer bounds require lo < hi ({lo} >= {hi})"));
                    }
                }
                ParamKind::Continuous(lo, hi) => {
                    if !(lo < hi) {
                        v.push(format!("{sctx}: continuous bounds require lo < hi ({lo} >= {hi})"));
                    }
                }
            }
            if let Some(cond) = &spec.condition {
                match alg.hyperparameters[..i].iter().find(|s| s.name == cond.parent) {
                    None => v.push(format!(
                        "{sctx}: activation condition references `{}`, which is not declared earlier (cycles are thereby excluded)",
                        cond.parent
                    )),
                    Some(parent) => {
                        for val in &cond.values {
                            if !parent.kind.contains(val) {
                                v.push(format!(
                                    "{sctx}: condition value {val} outside domain of `{}`",
                                    cond.parent
                                ));
                            }
                        }
                    }
                }
            }
            if let Some(bias) = &spec.bias {
                match &spec.kind {
                    ParamKind::Continuous(_, _) => {
                        v.push(format!("{sctx}: sampling bias unsupported on continuous domains"))
                    }
                    ParamKind::Categorical(vals) => {
                        for key in bias.keys() {
                            if !vals.iter().any(|x| x == key) {
                                v.push(format!("{sctx}: bias key `{key}` not in domain"));
                            }
                        }
                    }
                    ParamKind::Integer(lo, hi) => {
                        for key in bias.keys() {
                            match key.parse::<i64>() {
                                Ok(k) if *lo <= k && k <= *hi => {}
                                _ => v.push(format!("{sctx}: bias key `{key}` not in [{lo}, {hi}]")),
                            }
                        }
                    }
                }
                if bias.values().any(|w| !w.is_finite() || *w < 0.0) {
                    v.push(format!("{sctx}: bias weights must be finite and nonnegative"));
                }
            }
        }
        // default_theta must assign exactly the declared hyperparameters.
        for spec in &alg.hyperparameters {
            match alg.default_theta.get(&spec.name) {
                None => v.push(format!(
                    "{ctx}: default theta missing value for `{}`",
                    spec.name
                )),
                Some(val) => {
                    if !spec.kind.contains(val) {
                        v.push(format!(
                            "{ctx}: default value {val} for `{}` outside its {} domain",
                            spec.name,
                            spec.kind.kind_name()
                        ));
                    }
                }
            }
        }
        for key in alg.default_theta.keys() {
            if alg.spec(key).is_none() {
                v.push(format!("{ctx}: default theta assigns undeclared `{key}`"));
            }
        }
    }

    /// The pipeline whose first decision is `first_algorithm`, with every
    /// later step at its default (first-listed) algorithm and all
    /// hyperparameters at their defaults.
    pub fn default_pipeline(&self, first_algorithm: &str) -> Result<Pipeline, SpaceError> {
        self.require_algorithm(0, first_algorithm)?;
        let mut structure = vec![first_algorithm.to_string()];
        for step in &self.steps[1..] {
            structure.push(step.algorithms[0].name.clone());
        }
        if self.matches_forbidden(&structure) {
            let pat = self
                .forbidden
                .iter()
                .find(|pat| {
                    pat.0
                        .iter()
                        .all(|(s, a)| *s >= 1 && *s <= structure.len() && structure[*s - 1] == *a)
                })
                .expect("some pattern matched");
            return Err(SpaceError::Inadmissible {
                structure,
                pattern: format!("{:?}", pat.0),
            });
        }
        let theta = structure
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let alg = self.algorithm(i, name).expect("structure built from space");
                alg.normalize_theta(&alg.default_theta)
            })
            .collect();
        Ok(Pipeline { structure, theta })
    }

    /// Full validity check for an externally supplied pipeline.
    pub fn check_pipeline(&self, x: &Pipeline) -> Result<(), SpaceError> {
        if x.structure.len() != self.depth() {
            return Err(SpaceError::InvalidPipeline(format!(
                "structure has {} decisions, space has {}",
                x.structure.len(),
                self.depth()
            )));
        }
        if x.theta.len() != self.depth() {
            return Err(SpaceError::InvalidPipeline(format!(
                "theta has {} step maps, space has {} steps",
                x.theta.len(),
                self.depth()
            )));
        }
        for (i, name) in x.structure.iter().enumerate() {
            self.require_algorithm(i, name)?;
        }
        if self.matches_forbidden(&x.structure) {
            return Err(SpaceError::InvalidPipeline(format!(
                "structure {:?} is forbidden",
                x.structure
            )));
        }
        for (i, name) in x.structure.iter().enumerate() {
            let alg = self.algorithm(i, name).unwrap();
            let active = alg.active_specs(&x.theta[i]);
            for (spec, is_active) in alg.hyperparameters.iter().zip(&active) {
                match (x.theta[i].get(&spec.name), is_active) {
                    (Some(v), true) => {
                        if !spec.kind.contains(v) {
                            return Err(SpaceError::InvalidPipeline(format!(
                                "step {}: value {v} for `{}` outside its {} domain",
                                i + 1,
                                spec.name,
                                spec.kind.kind_name()
                            )));
                        }
                    }
                    (None, true) => {
                        return Err(SpaceError::InvalidPipeline(format!(
                            "step {}: active hyperparameter `{}` unassigned",
                            i + 1,
                            spec.name
                        )))
                    }
                    (Some(_), false) => {
                        return Err(SpaceError::InvalidPipeline(format!(
                            "step {}: inactive hyperparameter `{}` assigned",
                            i + 1,
                            spec.name
                        )))
                    }
                    (None, false) => {}
                }
            }
            for key in x.theta[i].keys() {
                if alg.spec(key).is_none() {
                    return Err(SpaceError::InvalidPipeline(format!(
                        "step {}: undeclared hyperparameter `{key}`",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// True iff the first `k` structure decisions of `x` equal `prefix`.
pub fn compatible(prefix: &PipelinePrefix, x: &Pipeline) -> bool {
    prefix.compatible(x)
}
