//! Single-change neighborhoods around an incumbent pipeline, used by the
//! local-search half of the playout candidate pool.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::collections::HashSet;

use super::{ParamKind, ParamValue, Pipeline, SearchSpace};

impl SearchSpace {
    /// Pipelines differing from `best` by a single hyperparameter value or a
    /// single structural decision.
    ///
    /// Categorical values are swapped for each alternative, integers stepped
    /// by ±1, continuous values perturbed `m` times by Gaussian noise of
    /// standard deviation `eps` in the [0,1]-normalized domain (clipped to
    /// bounds). Structure changes reset the changed step to the new
    /// algorithm's default theta. Inadmissible results are dropped, as are
    /// duplicates and `best` itself.
    pub fn neighbors<R: Rng>(
        &self,
        best: &Pipeline,
        eps: f64,
        m: usize,
        rng: &mut R,
    ) -> Vec<Pipeline> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        seen.insert(best.key());
        let push = |out: &mut Vec<Pipeline>, seen: &mut HashSet<String>, x: Pipeline| {
            if seen.insert(x.key()) {
                out.push(x);
            }
        };

        // Single hyperparameter changes.
        for (si, name) in best.structure.iter().enumerate() {
            let alg = self.algorithm(si, name).expect("valid incumbent");
            for spec in &alg.hyperparameters {
                let Some(cur) = best.theta[si].get(&spec.name) else {
                    continue; // inactive
                };
                match (&spec.kind, cur) {
                    (ParamKind::Categorical(values), ParamValue::Cat(s)) => {
                        for alt in values.iter().filter(|v| *v != s) {
                            let mut x = best.clone();
                            x.theta[si].insert(spec.name.clone(), ParamValue::Cat(alt.clone()));
                            // a changed value may flip sibling activations
                            x.theta[si] = alg.normalize_theta(&x.theta[si]);
                            push(&mut out, &mut seen, x);
                        }
                    }
                    (ParamKind::Integer(lo, hi), ParamValue::Int(i)) => {
                        for alt in [i - 1, i + 1] {
                            if alt >= *lo && alt <= *hi {
                                let mut x = best.clone();
                                x.theta[si].insert(spec.name.clone(), ParamValue::Int(alt));
                                x.theta[si] = alg.normalize_theta(&x.theta[si]);
                                push(&mut out, &mut seen, x);
                            }
                        }
                    }
                    (ParamKind::Continuous(lo, hi), ParamValue::Float(v)) => {
                        let width = hi - lo;
                        let normal = Normal::new(0.0, eps).expect("eps > 0");
                        for _ in 0..m {
                            let perturbed = v + normal.sample(rng) * width;
                            let clipped = perturbed.clamp(*lo, *hi);
                            let mut x = best.clone();
                            x.theta[si].insert(spec.name.clone(), ParamValue::Float(clipped));
                            push(&mut out, &mut seen, x);
                        }
                    }
                    _ => unreachable!("pipeline validated against the space"),
                }
            }
        }

        // Single structural changes, theta of the changed step reset to the
        // new algorithm's defaults.
        for (si, step) in self.steps.iter().enumerate() {
            for alt in step.algorithms.iter().filter(|a| a.name != best.structure[si]) {
                let mut structure = best.structure.clone();
                structure[si] = alt.name.clone();
                if self.matches_forbidden(&structure) {
                    continue;
                }
                let mut theta = best.theta.clone();
                theta[si] = alt.normalize_theta(&alt.default_theta);
                push(&mut out, &mut seen, Pipeline { structure, theta });
            }
        }
        out
    }
}
