//! Fixed-dimensional numeric encoding of pipelines for the surrogate.
//!
//! Layout, in declaration order: per step a one-hot block over the step's
//! algorithms, then per (algorithm, hyperparameter) a slot: one coordinate
//! for numeric kinds (min-max normalized to [0,1]), a one-hot block for
//! categorical kinds. Slots of unchosen algorithms and condition-inactive
//! hyperparameters hold the sentinel -1.

use super::{ParamKind, ParamValue, Pipeline, SearchSpace};

pub(crate) const INACTIVE: f64 = -1.0;

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub dim: usize,
    /// Offset of each step's algorithm one-hot block.
    pub step_offsets: Vec<usize>,
    /// (offset, len) per (step, algorithm index, spec index), flattened in
    /// declaration order.
    pub hp_slots: Vec<Vec<Vec<(usize, usize)>>>,
}

impl SearchSpace {
    pub(crate) fn layout(&self) -> &Layout {
        self.layout.get_or_init(|| {
            let mut dim = 0;
            let mut step_offsets = Vec::with_capacity(self.steps.len());
            let mut hp_slots = Vec::with_capacity(self.steps.len());
            for step in &self.steps {
                step_offsets.push(dim);
                dim += step.algorithms.len();
                let mut per_alg = Vec::with_capacity(step.algorithms.len());
                for alg in &step.algorithms {
                    let mut slots = Vec::with_capacity(alg.hyperparameters.len());
                    for spec in &alg.hyperparameters {
                        let len = match &spec.kind {
                            ParamKind::Categorical(values) => values.len(),
                            _ => 1,
                        };
                        slots.push((dim, len));
                        dim += len;
                    }
                    per_alg.push(slots);
                }
                hp_slots.push(per_alg);
            }
            Layout {
                dim,
                step_offsets,
                hp_slots,
            }
        })
    }

    /// Encoding dimensionality, fixed for the whole space.
    pub fn encoding_dim(&self) -> usize {
        self.layout().dim
    }

    /// Deterministic encoding of a valid pipeline.
    pub fn encode(&self, x: &Pipeline) -> Vec<f64> {
        let layout = self.layout();
        let mut v = vec![INACTIVE; layout.dim];
        for (si, step) in self.steps.iter().enumerate() {
            let base = layout.step_offsets[si];
            let chosen = step
                .algorithms
                .iter()
                .position(|a| a.name == x.structure[si])
                .expect("pipeline structure uses declared algorithms");
            for ai in 0..step.algorithms.len() {
                v[base + ai] = if ai == chosen { 1.0 } else { 0.0 };
            }
            let alg = &step.algorithms[chosen];
            for (pi, spec) in alg.hyperparameters.iter().enumerate() {
                let (off, len) = layout.hp_slots[si][chosen][pi];
                let Some(val) = x.theta[si].get(&spec.name) else {
                    continue; // inactive: sentinel stays
                };
                match (&spec.kind, val) {
                    (ParamKind::Categorical(values), ParamValue::Cat(s)) => {
                        let idx = values.iter().position(|c| c == s).expect("value in domain");
                        for k in 0..len {
                            v[off + k] = if k == idx { 1.0 } else { 0.0 };
                        }
                    }
                    (ParamKind::Integer(lo, hi), ParamValue::Int(i)) => {
                        v[off] = (i - lo) as f64 / (hi - lo) as f64;
                    }
                    (ParamKind::Continuous(lo, hi), ParamValue::Float(x)) => {
                        v[off] = (x - lo) / (hi - lo);
                    }
                    _ => unreachable!("pipeline validated against the space"),
                }
            }
        }
        v
    }
}
