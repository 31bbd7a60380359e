//! Archive of (meta-feature vector, best pipeline) pairs and
//! nearest-neighbor retrieval for warm-started initialization.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::space::Pipeline;

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed archive: {0}")]
    Json(#[from] serde_json::Error),
    #[error("archive entry `{id}`: {problem}")]
    BadEntry { id: String, problem: String },
    #[error("meta-feature dimensionality mismatch: archive has {expected}, query has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("archive is empty")]
    Empty,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ArchiveEntry {
    pub id: String,
    pub meta: Vec<f64>,
    pub pipeline: Pipeline,
    pub reward: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct Archive {
    pub feature_names: Vec<String>,
    pub entries: Vec<ArchiveEntry>,
}

/// Meta-feature vector of a dataset, aligned with `Archive::feature_names`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaFeatures {
    pub values: Vec<f64>,
}

impl Archive {
    pub fn validate(&self) -> Result<(), ArchiveError> {
        let dim = self.feature_names.len();
        for e in &self.entries {
            if e.meta.len() != dim {
                return Err(ArchiveError::BadEntry {
                    id: e.id.clone(),
                    problem: format!("meta vector has {} values, expected {dim}", e.meta.len()),
                });
            }
            if e.meta.iter().any(|v| !v.is_finite()) {
                return Err(ArchiveError::BadEntry {
                    id: e.id.clone(),
                    problem: "non-finite meta-feature value".to_string(),
                });
            }
            if !e.reward.is_finite() || !(0.0..=1.0).contains(&e.reward) {
                return Err(ArchiveError::BadEntry {
                    id: e.id.clone(),
                    problem: format!("reward {} outside [0, 1]", e.reward),
                });
            }
        }
        Ok(())
    }

    /// Leave-one-out filter by dataset id.
    pub fn without(&self, id: &str) -> Archive {
        Archive {
            feature_names: self.feature_names.clone(),
            entries: self.entries.iter().filter(|e| e.id != id).cloned().collect(),
        }
    }

    /// Per-feature mean and standard deviation over the archive, the
    /// standardization used by the neighbor distance. Zero-variance features
    /// are flagged and dropped from the distance.
    fn standardization(&self) -> Vec<(f64, f64)> {
        let dim = self.feature_names.len();
        let n = self.entries.len() as f64;
        (0..dim)
            .map(|i| {
                let mean = self.entries.iter().map(|e| e.meta[i]).sum::<f64>() / n;
                let var = self
                    .entries
                    .iter()
                    .map(|e| (e.meta[i] - mean).powi(2))
                    .sum::<f64>()
                    / n;
                (mean, var.sqrt())
            })
            .collect()
    }
}

/// Archive entries by ascending Euclidean distance on standardized
/// meta-features (ties by dataset id), truncated to `k`.
pub fn nearest_datasets<'a>(
    archive: &'a Archive,
    z: &MetaFeatures,
    k: usize,
) -> Result<Vec<&'a ArchiveEntry>, ArchiveError> {
    if archive.entries.is_empty() {
        return Err(ArchiveError::Empty);
    }
    if z.values.len() != archive.feature_names.len() {
        return Err(ArchiveError::DimensionMismatch {
            expected: archive.feature_names.len(),
            got: z.values.len(),
        });
    }
    let stats = archive.standardization();
    let dist = |e: &ArchiveEntry| -> f64 {
        e.meta
            .iter()
            .zip(&z.values)
            .zip(&stats)
            .filter(|(_, (_, sd))| *sd > 0.0)
            .map(|((a, b), (mean, sd))| {
                let d = (a - mean) / sd - (b - mean) / sd;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    };
    let mut scored: Vec<(f64, &ArchiveEntry)> = archive.entries.iter().map(|e| (dist(e), e)).collect();
    scored.sort_by(|(da, ea), (db, eb)| {
        da.partial_cmp(db)
            .expect("finite distances")
            .then_with(|| ea.id.cmp(&eb.id))
    });
    Ok(scored.into_iter().take(k).map(|(_, e)| e).collect())
}

pub fn load_archive(path: impl AsRef<Path>) -> Result<Archive, ArchiveError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ArchiveError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let archive: Archive = serde_json::from_str(&text)?;
    archive.validate()?;
    Ok(archive)
}

pub fn save_archive(archive: &Archive, path: impl AsRef<Path>) -> Result<(), ArchiveError> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(archive).expect("archive serializes");
    std::fs::write(path, text).map_err(|source| ArchiveError::Io {
        path: path.display().to_string(),
        source,
    })
}
