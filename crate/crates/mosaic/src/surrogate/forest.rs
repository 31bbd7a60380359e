//! CART regression forest: bootstrap resamples, variance-reduction splits
//! over a random ⌈√d⌉ feature subset per node, leaf at `min_leaf` samples.
//! Fitting is deterministic given the seed stream.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ForestParams, Prediction, SurrogateError, TrainingSet};

#[derive(Debug, Clone)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        mean: f64,
        #[allow(dead_code)]
        count: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { mean, .. } => return *mean,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SurrogateForest {
    trees: Vec<Tree>,
    dim: usize,
    target_min: f64,
    target_max: f64,
    pub training_size: usize,
}

impl SurrogateForest {
    /// Fits `params.n_trees` regression trees on bootstrap resamples of `data`.
    pub fn fit<R: Rng>(
        data: &TrainingSet,
        params: &ForestParams,
        rng: &mut R,
    ) -> Result<SurrogateForest, SurrogateError> {
        if data.rows.len() < 2 {
            return Err(SurrogateError::InsufficientData(data.rows.len()));
        }
        let dim = data.rows[0].0.len();
        let n = data.rows.len();
        let n_features = (dim as f64).sqrt().ceil() as usize;
        // per-tree seeds drawn up-front so the fit is a pure function of the
        // incoming rng state
        let seeds: Vec<u64> = (0..params.n_trees).map(|_| rng.random()).collect();
        let trees = seeds
            .into_iter()
            .map(|seed| {
                let mut trng = ChaCha8Rng::seed_from_u64(seed);
                let indices: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| trng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut tree = Tree { nodes: Vec::new() };
                build_node(&mut tree, data, indices, params.min_leaf, n_features, &mut trng);
                tree
            })
            .collect();
        let target_min = data.rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let target_max = data.rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        Ok(SurrogateForest {
            trees,
            dim,
            target_min,
            target_max,
            training_size: n,
        })
    }

    /// Mean of per-tree leaf means and the population variance across trees.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction, SurrogateError> {
        if x.len() != self.dim {
            return Err(SurrogateError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let preds: Vec<f64> = self.trees.iter().map(|t| t.predict(x)).collect();
        let mean = super::stable_mean(&preds);
        let variance = preds.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / preds.len() as f64;
        Ok(Prediction { mean, variance })
    }

    /// Shortcut when the input is known to be well-formed.
    pub fn predict_mean(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let preds: Vec<f64> = self.trees.iter().map(|t| t.predict(x)).collect();
        super::stable_mean(&preds)
    }

    pub fn target_range(&self) -> (f64, f64) {
        (self.target_min, self.target_max)
    }

    /// Forest of single-leaf trees with fixed outputs, for variance-path tests.
    #[cfg(test)]
    pub(crate) fn from_leaf_means(means: &[f64], dim: usize) -> Self {
        let trees = means
            .iter()
            .map(|&m| Tree {
                nodes: vec![Node::Leaf { mean: m, count: 1 }],
            })
            .collect();
        SurrogateForest {
            trees,
            dim,
            target_min: means.iter().copied().fold(f64::INFINITY, f64::min),
            target_max: means.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            training_size: means.len(),
        }
    }
}

fn build_node(
    tree: &mut Tree,
    data: &TrainingSet,
    indices: Vec<usize>,
    min_leaf: usize,
    n_features: usize,
    rng: &mut ChaCha8Rng,
) -> usize {
    let n = indices.len();
    let targets: Vec<f64> = indices.iter().map(|&i| data.rows[i].1).collect();
    let mean = super::stable_mean(&targets);
    let make_leaf = |tree: &mut Tree| {
        tree.nodes.push(Node::Leaf { mean, count: n });
        tree.nodes.len() - 1
    };
    if n <= min_leaf {
        return make_leaf(tree);
    }
    let constant_target = indices.iter().all(|&i| data.rows[i].1 == data.rows[indices[0]].1);
    if constant_target {
        return make_leaf(tree);
    }

    let dim = data.rows[0].0.len();
    let mut features: Vec<usize> = (0..dim).collect();
    features.shuffle(rng);

    let mut best: Option<(f64, usize, f64)> = None; // (sse, feature, threshold)
    let mut order = indices.clone();
    for (fi, &f) in features.iter().enumerate() {
        // the random subset first; past it, keep scanning only until some
        // feature splits (a node with splittable rows must not go impure-leaf)
        if fi >= n_features.min(dim) && best.is_some() {
            break;
        }
        order.sort_by(|&a, &b| {
            data.rows[a].0[f]
                .partial_cmp(&data.rows[b].0[f])
                .expect("finite features")
        });
        // prefix sums over targets in feature order
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        let total_sum: f64 = order.iter().map(|&i| data.rows[i].1).sum();
        let total_sq: f64 = order.iter().map(|&i| data.rows[i].1 * data.rows[i].1).sum();
        for cut in 1..n {
            let y = data.rows[order[cut - 1]].1;
            left_sum += y;
            left_sq += y * y;
            let xv = data.rows[order[cut - 1]].0[f];
            let xn = data.rows[order[cut]].0[f];
            if xv == xn {
                continue; // no threshold separates equal values
            }
            let nl = cut as f64;
            let nr = (n - cut) as f64;
            let sse_l = left_sq - left_sum * left_sum / nl;
            let sse_r = (total_sq - left_sq) - (total_sum - left_sum) * (total_sum - left_sum) / nr;
            let sse = sse_l + sse_r;
            if best.map(|(b, _, _)| sse < b).unwrap_or(true) {
                best = Some((sse, f, 0.5 * (xv + xn)));
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        return make_leaf(tree); // all candidate features constant
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .into_iter()
        .partition(|&i| data.rows[i].0[feature] <= threshold);
    let slot = tree.nodes.len();
    tree.nodes.push(Node::Leaf { mean, count: n }); // placeholder
    let left = build_node(tree, data, left_idx, min_leaf, n_features, rng);
    let right = build_node(tree, data, right_idx, min_leaf, n_features, rng);
    tree.nodes[slot] = Node::Split {
        feature,
        threshold,
        left,
        right,
    };
    slot
}
