//! JSON document format for search spaces.
//!
//! ```json
//! {
//!   "name": "example",
//!   "steps": [
//!     {
//!       "index": 1,
//!       "algorithms": [
//!         {
//!           "name": "svm",
//!           "default": {"c": 1.0, "kernel": "rbf"},
//!           "hyperparameters": [
//!             {"name": "c", "kind": "continuous", "domain": [0.01, 10.0]},
//!             {"name": "kernel", "kind": "categorical", "domain": ["rbf", "poly"]},
//!             {"name": "degree", "kind": "integer", "domain": [2, 5],
//!              "condition": {"parent": "kernel", "values": ["poly"]},
//!              "bias": {"2": 0.7, "3": 0.3}}
//!           ]
//!         }
//!       ]
//!     }
//!   ],
//!   "forbidden": [[{"step": 1, "algorithm": "svm"}]]
//! }
//! ```
//!
//! Unknown fields are rejected. An algorithm's `default` must assign every
//! hyperparameter it declares (conditionally inactive ones included).

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

use super::{
    AlgorithmChoice, Condition, DecisionStep, ForbiddenPattern, HyperparameterSpec, ParamKind,
    ParamValue, SearchSpace,
};

#[derive(Debug, Error)]
pub enum SpaceFileError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed space document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad field value: {0}")]
    Schema(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceDoc {
    name: String,
    steps: Vec<StepDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    forbidden: Vec<Vec<ForbiddenPairDoc>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepDoc {
    index: usize,
    algorithms: Vec<AlgorithmDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlgorithmDoc {
    name: String,
    #[serde(default)]
    default: BTreeMap<String, ParamValue>,
    #[serde(default)]
    hyperparameters: Vec<HyperparameterDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HyperparameterDoc {
    name: String,
    kind: String,
    domain: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    condition: Option<ConditionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConditionDoc {
    parent: String,
    values: Vec<ParamValue>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForbiddenPairDoc {
    step: usize,
    algorithm: String,
}

fn parse_kind(doc: &HyperparameterDoc) -> Result<ParamKind, SpaceFileError> {
    let ctx = &doc.name;
    match doc.kind.as_str() {
        "categorical" => {
            let values: Vec<String> = serde_json::from_value(doc.domain.clone())
                .map_err(|e| SpaceFileError::Schema(format!("`{ctx}`: categorical domain: {e}")))?;
            Ok(ParamKind::Categorical(values))
        }
        "integer" => {
            let bounds: [i64; 2] = serde_json::from_value(doc.domain.clone())
                .map_err(|e| SpaceFileError::Schema(format!("`{ctx}`: integer domain: {e}")))?;
            Ok(ParamKind::Integer(bounds[0], bounds[1]))
        }
        "continuous" => {
            let bounds: [f64; 2] = serde_json::from_value(doc.domain.clone())
                .map_err(|e| SpaceFileError::Schema(format!("`{ctx}`: continuous domain: {e}")))?;
            if !bounds[0].is_finite() || !bounds[1].is_finite() {
                return Err(SpaceFileError::Schema(format!(
                    "`{ctx}`: unbounded continuous domains are unsupported"
                )));
            }
            Ok(ParamKind::Continuous(bounds[0], bounds[1]))
        }
        other => Err(SpaceFileError::Schema(format!(
            "`{ctx}`: unknown kind `{other}` (expected categorical|integer|continuous)"
        ))),
    }
}

pub fn space_from_json(text: &str) -> Result<SearchSpace, SpaceFileError> {
    let doc: SpaceDoc = serde_json::from_str(text)?;
    let steps = doc
        .steps
        .into_iter()
        .map(|s| {
            let algorithms = s
                .algorithms
                .into_iter()
                .map(|a| {
                    let hyperparameters = a
                        .hyperparameters
                        .iter()
                        .map(|h| {
                            Ok(HyperparameterSpec {
                                name: h.name.clone(),
                                kind: parse_kind(h)?,
                                condition: h.condition.as_ref().map(|c| Condition {
                                    parent: c.parent.clone(),
                                    values: c.values.clone(),
                                }),
                                bias: h.bias.clone(),
                            })
                        })
                        .collect::<Result<Vec<_>, SpaceFileError>>()?;
                    Ok(AlgorithmChoice {
                        name: a.name,
                        default_theta: a.default,
                        hyperparameters,
                    })
                })
                .collect::<Result<Vec<_>, SpaceFileError>>()?;
            Ok(DecisionStep {
                index: s.index,
                algorithms,
            })
        })
        .collect::<Result<Vec<_>, SpaceFileError>>()?;
    let forbidden = doc
        .forbidden
        .into_iter()
        .map(|pat| ForbiddenPattern(pat.into_iter().map(|p| (p.step, p.algorithm)).collect()))
        .collect();
    Ok(SearchSpace::new(doc.name, steps, forbidden))
}

pub fn space_to_json(space: &SearchSpace) -> String {
    let doc = SpaceDoc {
        name: space.name.clone(),
        steps: space
            .steps
            .iter()
            .map(|s| StepDoc {
                index: s.index,
                algorithms: s
                    .algorithms
                    .iter()
                    .map(|a| AlgorithmDoc {
                        name: a.name.clone(),
                        default: a.default_theta.clone(),
                        hyperparameters: a
                            .hyperparameters
                            .iter()
                            .map(|h| HyperparameterDoc {
                                name: h.name.clone(),
                                kind: h.kind.kind_name().to_string(),
                                domain: match &h.kind {
                                    ParamKind::Categorical(v) => serde_json::json!(v),
                                    ParamKind::Integer(lo, hi) => serde_json::json!([lo, hi]),
                                    ParamKind::Continuous(lo, hi) => serde_json::json!([lo, hi]),
                                },
                                condition: h.condition.as_ref().map(|c| ConditionDoc {
                                    parent: c.parent.clone(),
                                    values: c.values.clone(),
                                }),
                                bias: h.bias.clone(),
                            })
                            .collect(),
                    })
                    .collect(),
            })
            .collect(),
        forbidden: space
            .forbidden
            .iter()
            .map(|pat| {
                pat.0
                    .iter()
                    .map(|(step, algorithm)| ForbiddenPairDoc {
                        step: *step,
                        algorithm: algorithm.clone(),
                    })
                    .collect()
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("space serializes")
}

pub fn load_space(path: impl AsRef<Path>) -> Result<SearchSpace, SpaceFileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SpaceFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    space_from_json(&text)
}

pub fn save_space(space: &SearchSpace, path: impl AsRef<Path>) -> Result<(), SpaceFileError> {
    let path = path.as_ref();
    std::fs::write(path, space_to_json(space)).map_err(|source| SpaceFileError::Io {
        path: path.display().to_string(),
        source,
    })
}
