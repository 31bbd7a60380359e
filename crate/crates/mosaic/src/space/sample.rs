//! The default sampling distribution `D`: uniform over admissible structure
//! completions step by step, then uniform (or bias-weighted) over each
//! active hyperparameter domain.

use rand::Rng;

use super::{
    AlgorithmChoice, HyperparameterSpec, ParamKind, ParamValue, Pipeline, PipelinePrefix,
    SearchSpace, SpaceError, ThetaMap,
};

impl SearchSpace {
    /// Draws one pipeline from `D` restricted to the completions of `prefix`.
    ///
    /// Choices with a single admissible option consume no randomness, so the
    /// draw sequence is identical whether such decisions are pinned by the
    /// prefix or left open.
    pub fn sample_default<R: Rng>(
        &self,
        prefix: &PipelinePrefix,
        rng: &mut R,
    ) -> Result<Pipeline, SpaceError> {
        if prefix.len() > self.depth() || !self.has_admissible_completion(&prefix.decisions) {
            return Err(SpaceError::DeadEndPrefix(prefix.decisions.clone()));
        }
        let mut structure = prefix.decisions.clone();
        while structure.len() < self.depth() {
            let options = self.admissible_extensions(&PipelinePrefix::new(structure.clone()));
            debug_assert!(!options.is_empty());
            let pick = if options.len() == 1 {
                0
            } else {
                rng.random_range(0..options.len())
            };
            structure.push(options[pick].clone());
        }
        let theta = structure
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let alg = self.algorithm(i, name).expect("admissible structure");
                sample_theta(alg, rng)
            })
            .collect();
        Ok(Pipeline { structure, theta })
    }
}

fn sample_theta<R: Rng>(alg: &AlgorithmChoice, rng: &mut R) -> ThetaMap {
    let mut theta = ThetaMap::new();
    for (i, spec) in alg.hyperparameters.iter().enumerate() {
        let active = match &spec.condition {
            None => true,
            Some(cond) => {
                let parent_declared_earlier = alg.hyperparameters[..i]
                    .iter()
                    .any(|s| s.name == cond.parent);
                parent_declared_earlier
                    && theta
                        .get(&cond.parent)
                        .map(|v| cond.values.contains(v))
                        .unwrap_or(false)
            }
        };
        if active {
            theta.insert(spec.name.clone(), sample_value(spec, rng));
        }
    }
    theta
}

fn sample_value<R: Rng>(spec: &HyperparameterSpec, rng: &mut R) -> ParamValue {
    match &spec.kind {
        ParamKind::Categorical(values) => {
            let idx = match &spec.bias {
                Some(bias) => {
                    let weights: Vec<f64> = values
                        .iter()
                        .map(|v| bias.get(v).copied().unwrap_or(0.0))
                        .collect();
                    weighted_index(&weights, rng)
                }
                None => rng.random_range(0..values.len()),
            };
            ParamValue::Cat(values[idx].clone())
        }
        ParamKind::Integer(lo, hi) => {
            let v = match &spec.bias {
                Some(bias) => {
                    let support: Vec<i64> = (*lo..=*hi).collect();
                    let weights: Vec<f64> = support
                        .iter()
                        .map(|k| bias.get(&k.to_string()).copied().unwrap_or(0.0))
                        .collect();
                    support[weighted_index(&weights, rng)]
                }
                None => rng.random_range(*lo..=*hi),
            };
            ParamValue::Int(v)
        }
        ParamKind::Continuous(lo, hi) => ParamValue::Float(lo + (hi - lo) * rng.random::<f64>()),
    }
}

fn weighted_index<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0, "bias weights sum to zero");
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}
