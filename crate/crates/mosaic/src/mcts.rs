//! The tree search over pipeline structures.
//!
//! Nodes accumulate the true rewards back-propagated through them; selection
//! scores an expanded child by the median of its rewards plus an exploration
//! bonus weighted by the surrogate-derived prior π (a UCB rule is kept as an
//! ablation). Expansion is gated by progressive widening and picks the
//! unexpanded action with the best partial-surrogate value. Playouts complete
//! a prefix into a full pipeline by Expected-Improvement argmax over a pool
//! of default-distribution samples and incumbent neighbors.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{Pipeline, PipelinePrefix, SearchSpace, SpaceError};
use crate::surrogate::{self, SurrogateError, SurrogateForest};

#[derive(Debug, Error)]
pub enum MctsError {
    #[error("select_child called on a node with no expanded children")]
    SelectOnLeaf,
    #[error("expand called with no unexpanded admissible action")]
    NoUnexpandedAction,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    Puct,
    Ucb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlayoutStrategy {
    /// Pool of default-distribution samples plus incumbent neighbors,
    /// Expected-Improvement argmax.
    EiMixed,
    /// One draw from the default distribution (ablation).
    DefaultOnly,
    /// Local search around the incumbent, best surrogate mean (ablation).
    LocalOnly,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchParams {
    /// Exploration constant of the selection rule.
    pub c_ucb: f64,
    /// Progressive-widening exponent.
    pub pw: f64,
    /// Samples per partial-surrogate estimate.
    pub n_s: usize,
    /// Default-distribution samples per playout pool.
    pub n_r: usize,
    /// Std-dev of continuous-hyperparameter perturbations ([0,1] domain).
    pub eps: f64,
    pub selection_rule: SelectionRule,
    pub playout_strategy: PlayoutStrategy,
    /// Gaussian perturbations per continuous hyperparameter in a
    /// neighborhood.
    pub neighbor_count: usize,
    /// Cached priors are refreshed after this many surrogate retrains.
    pub pi_refresh_interval: u64,
    /// Normalize π over all admissible actions instead of expanded children
    /// only (sensitivity switch).
    pub pi_over_all_actions: bool,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            c_ucb: 1.3,
            pw: 0.6,
            n_s: 100,
            n_r: 1000,
            eps: 0.2,
            selection_rule: SelectionRule::Puct,
            playout_strategy: PlayoutStrategy::EiMixed,
            neighbor_count: 4,
            pi_refresh_interval: 10,
            pi_over_all_actions: false,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.c_ucb > 0.0) {
            return Err(format!("c_ucb must be > 0, got {}", self.c_ucb));
        }
        if !(self.pw > 0.0 && self.pw <= 1.0) {
            return Err(format!("pw must lie in (0, 1], got {}", self.pw));
        }
        if self.n_s == 0 || self.n_r == 0 {
            return Err("n_s and n_r must be >= 1".to_string());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct CachedPi {
    values: Vec<f64>,
    generation: u64,
    n_children: usize,
}

#[derive(Debug, Clone)]
pub struct MctsNode {
    pub prefix: PipelinePrefix,
    pub n_visits: usize,
    /// All true rewards back-propagated through this node.
    pub rewards: Vec<f64>,
    /// Expanded children in expansion order.
    pub children: Vec<(String, MctsNode)>,
    cached_pi: Option<CachedPi>,
}

impl MctsNode {
    pub fn new(prefix: PipelinePrefix) -> Self {
        Self {
            prefix,
            n_visits: 0,
            rewards: Vec::new(),
            children: Vec::new(),
            cached_pi: None,
        }
    }

    /// Median reward (mean-of-middle-two for even counts); 0 when empty.
    pub fn median_reward(&self) -> f64 {
        median(&self.rewards)
    }

    pub fn child(&self, action: &str) -> Option<&MctsNode> {
        self.children.iter().find(|(a, _)| a == action).map(|(_, n)| n)
    }

    fn child_mut(&mut self, action: &str) -> Option<&mut MctsNode> {
        self.children
            .iter_mut()
            .find(|(a, _)| a == action)
            .map(|(_, n)| n)
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite rewards"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// True iff progressive widening admits a new child: ⌊max(n,1)^pw⌋ exceeds
/// the current child count. The caller must also check that an unexpanded
/// admissible action remains.
pub fn pw_allows_expansion(n_visits: usize, n_children: usize, pw: f64) -> bool {
    let n = n_visits.max(1) as f64;
    (n.powf(pw).floor() as usize) > n_children
}

/// Score of the default selection rule for one expanded child:
/// `median + c_ucb · π · √n(s) / (1 + n(s.a))`.
pub fn puct_score(median: f64, pi: f64, c_ucb: f64, n_parent: usize, n_child: usize) -> f64 {
    median + c_ucb * pi * (n_parent as f64).sqrt() / (1.0 + n_child as f64)
}

/// Score of the UCB ablation for one visited child:
/// `mean + c_ucb · √(ln n(s) / n(s.a))`.
pub fn ucb_score(mean: f64, c_ucb: f64, n_parent: usize, n_child: usize) -> f64 {
    mean + c_ucb * ((n_parent as f64).ln() / n_child as f64).sqrt()
}

fn argmax_uniform_tie<R: Rng>(scores: &[f64], rng: &mut R) -> usize {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] == best).collect();
    if ties.len() == 1 {
        ties[0]
    } else {
        ties[rng.random_range(0..ties.len())]
    }
}

/// Selection over expanded children. The default rule scores child `a` as
/// `median(s.a) + c_ucb · π(a|s) · √n(s) / (1 + n(s.a))`; the UCB ablation
/// uses the mean reward with a `√(log n(s) / n(s.a))` bonus and picks
/// unvisited children first. Ties break uniformly at random.
pub fn select_child<R: Rng>(
    node: &mut MctsNode,
    model: &SurrogateForest,
    space: &SearchSpace,
    params: &SearchParams,
    generation: u64,
    rng: &mut R,
) -> Result<String, MctsError> {
    if node.children.is_empty() {
        return Err(MctsError::SelectOnLeaf);
    }
    if node.children.len() == 1 {
        return Ok(node.children[0].0.clone());
    }
    let scores = match params.selection_rule {
        SelectionRule::Puct => {
            let pi = cached_policy(node, model, space, params, generation, rng)?;
            node.children
                .iter()
                .enumerate()
                .map(|(i, (_, c))| {
                    puct_score(c.median_reward(), pi[i], params.c_ucb, node.n_visits, c.n_visits)
                })
                .collect::<Vec<f64>>()
        }
        SelectionRule::Ucb => {
            let unvisited: Vec<usize> = node
                .children
                .iter()
                .enumerate()
                .filter(|(_, (_, c))| c.n_visits == 0)
                .map(|(i, _)| i)
                .collect();
            if !unvisited.is_empty() {
                let pick = if unvisited.len() == 1 {
                    unvisited[0]
                } else {
                    unvisited[rng.random_range(0..unvisited.len())]
                };
                return Ok(node.children[pick].0.clone());
            }
            node.children
                .iter()
                .map(|(_, c)| {
                    let mean = c.rewards.iter().sum::<f64>() / c.rewards.len() as f64;
                    ucb_score(mean, params.c_ucb, node.n_visits, c.n_visits)
                })
                .collect::<Vec<f64>>()
        }
    };
    let pick = argmax_uniform_tie(&scores, rng);
    Ok(node.children[pick].0.clone())
}

/// π over the expanded children, recomputed lazily: the cache is refreshed
/// when the child set changed or after `pi_refresh_interval` retrains.
fn cached_policy<R: Rng>(
    node: &mut MctsNode,
    model: &SurrogateForest,
    space: &SearchSpace,
    params: &SearchParams,
    generation: u64,
    rng: &mut R,
) -> Result<Vec<f64>, MctsError> {
    let stale = match &node.cached_pi {
        Some(c) => {
            c.n_children != node.children.len()
                || generation.saturating_sub(c.generation) >= params.pi_refresh_interval
        }
        None => true,
    };
    if stale {
        let expanded: Vec<String> = node.children.iter().map(|(a, _)| a.clone()).collect();
        let values = if params.pi_over_all_actions {
            // softmax over all admissible actions, restricted (unnormalized)
            // to the expanded ones
            let actions = space.admissible_extensions(&node.prefix);
            let qs = actions
                .iter()
                .map(|a| surrogate::q_hat(model, space, &node.prefix, a, params.n_s, rng))
                .collect::<Result<Vec<f64>, _>>()?;
            let full = surrogate::softmax(&qs);
            expanded
                .iter()
                .map(|a| {
                    actions
                        .iter()
                        .position(|b| b == a)
                        .map(|i| full[i])
                        .unwrap_or(0.0)
                })
                .collect()
        } else {
            surrogate::policy(model, space, &node.prefix, &expanded, params.n_s, rng)?
        };
        node.cached_pi = Some(CachedPi {
            values,
            generation,
            n_children: node.children.len(),
        });
    }
    Ok(node.cached_pi.as_ref().unwrap().values.clone())
}

/// Picks the unexpanded admissible action maximizing the partial surrogate
/// and creates the child node. A lone candidate is taken without consulting
/// the surrogate.
pub fn expand<R: Rng>(
    node: &mut MctsNode,
    model: &SurrogateForest,
    space: &SearchSpace,
    params: &SearchParams,
    rng: &mut R,
) -> Result<String, MctsError> {
    let candidates: Vec<String> = space
        .admissible_extensions(&node.prefix)
        .into_iter()
        .filter(|a| node.child(a).is_none())
        .collect();
    if candidates.is_empty() {
        return Err(MctsError::NoUnexpandedAction);
    }
    let action = if candidates.len() == 1 {
        candidates.into_iter().next().unwrap()
    } else {
        let qs = candidates
            .iter()
            .map(|a| surrogate::q_hat(model, space, &node.prefix, a, params.n_s, rng))
            .collect::<Result<Vec<f64>, _>>()?;
        let pick = argmax_uniform_tie(&qs, rng);
        candidates.into_iter().nth(pick).unwrap()
    };
    let child = MctsNode::new(node.prefix.child(&action));
    node.children.push((action.clone(), child));
    Ok(action)
}

/// Completes `prefix` into a full pipeline.
pub fn playout<R: Rng>(
    prefix: &PipelinePrefix,
    model: &SurrogateForest,
    space: &SearchSpace,
    incumbent: Option<(&Pipeline, f64)>,
    fallback_f_best: f64,
    evaluated: &HashSet<String>,
    params: &SearchParams,
    rng: &mut R,
) -> Result<Pipeline, MctsError> {
    match params.playout_strategy {
        PlayoutStrategy::DefaultOnly => Ok(space.sample_default(prefix, rng)?),
        PlayoutStrategy::LocalOnly => {
            let Some((best, _)) = incumbent else {
                return Ok(space.sample_default(prefix, rng)?);
            };
            let pool: Vec<Pipeline> = space
                .neighbors(best, params.eps, params.neighbor_count, rng)
                .into_iter()
                .filter(|x| prefix.compatible(x))
                .collect();
            if pool.is_empty() {
                return Ok(space.sample_default(prefix, rng)?);
            }
            let scores: Vec<f64> = pool.iter().map(|x| model.predict_mean(&space.encode(x))).collect();
            let pick = argmax_uniform_tie(&scores, rng);
            Ok(pool.into_iter().nth(pick).unwrap())
        }
        PlayoutStrategy::EiMixed => {
            let mut pool = Vec::with_capacity(params.n_r);
            for _ in 0..params.n_r {
                pool.push(space.sample_default(prefix, rng)?);
            }
            let f_best = match incumbent {
                Some((best, reward)) => {
                    pool.extend(
                        space
                            .neighbors(best, params.eps, params.neighbor_count, rng)
                            .into_iter()
                            .filter(|x| prefix.compatible(x)),
                    );
                    reward
                }
                None => fallback_f_best,
            };
            let mut scores: Vec<f64> = pool
                .iter()
                .map(|x| {
                    let p = model.predict(&space.encode(x)).expect("dims match");
                    surrogate::ei_from_prediction(p.mean, p.variance.sqrt(), f_best)
                })
                .collect();
            // prefer unevaluated candidates; re-proposing a known pipeline
            // only makes sense when the whole pool has been tried already
            if pool.iter().any(|x| !evaluated.contains(&x.key())) {
                for (s, x) in scores.iter_mut().zip(&pool) {
                    if evaluated.contains(&x.key()) {
                        *s = f64::NEG_INFINITY;
                    }
                }
            }
            let pick = argmax_uniform_tie(&scores, rng);
            Ok(pool.into_iter().nth(pick).unwrap())
        }
    }
}

#[derive(Debug, Clone)]
pub struct MctsTree {
    pub root: MctsNode,
    depth: usize,
}

impl MctsTree {
    pub fn new(space: &SearchSpace) -> Self {
        Self {
            root: MctsNode::new(PipelinePrefix::empty()),
            depth: space.depth(),
        }
    }

    /// One descent: selection through expanded children, at most one
    /// progressive-widening expansion, then a playout completing the reached
    /// prefix. Returns the action path and the candidate pipeline.
    pub fn walk_to_candidate<R: Rng>(
        &mut self,
        model: &SurrogateForest,
        space: &SearchSpace,
        params: &SearchParams,
        generation: u64,
        incumbent_for: impl Fn(&PipelinePrefix) -> Option<(Pipeline, f64)>,
        global_best: f64,
        evaluated: &HashSet<String>,
        rng: &mut R,
    ) -> Result<(Vec<String>, Pipeline), MctsError> {
        let depth = self.depth;
        let mut actions = Vec::new();
        let mut node = &mut self.root;
        loop {
            if node.prefix.len() == depth {
                break; // terminal: playout only fills theta
            }
            let has_unexpanded = space
                .admissible_extensions(&node.prefix)
                .iter()
                .any(|a| node.child(a).is_none());
            if has_unexpanded && pw_allows_expansion(node.n_visits, node.children.len(), params.pw) {
                let a = expand(node, model, space, params, rng)?;
                actions.push(a.clone());
                node = node.child_mut(&a).unwrap();
                break;
            }
            if node.children.is_empty() {
                break;
            }
            let a = select_child(node, model, space, params, generation, rng)?;
            actions.push(a.clone());
            node = node.child_mut(&a).unwrap();
        }
        let prefix = node.prefix.clone();
        let incumbent = incumbent_for(&prefix);
        let candidate = playout(
            &prefix,
            model,
            space,
            incumbent.as_ref().map(|(x, r)| (x, *r)),
            global_best,
            evaluated,
            params,
            rng,
        )?;
        Ok((actions, candidate))
    }

    /// Adds `reward` to every node along `path` (root included), bumping
    /// visit counts. No other node is touched.
    pub fn backpropagate(&mut self, path: &[String], reward: f64) {
        debug_assert!((0.0..=1.0).contains(&reward));
        let mut node = &mut self.root;
        node.n_visits += 1;
        node.rewards.push(reward);
        for action in path {
            node = node.child_mut(action).expect("path follows expanded children");
            node.n_visits += 1;
            node.rewards.push(reward);
        }
    }
}
