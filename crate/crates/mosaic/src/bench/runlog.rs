//! Line-delimited run logs: one JSON header line followed by one JSON object
//! per evaluation. Files are written atomically (temp file + rename) so
//! parallel suite cells never expose partial logs.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optimizer::{OptimizationResult, Status};
use crate::space::Pipeline;

#[derive(Debug, Error)]
pub enum RunLogError {
    #[error("cannot access `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("log is empty (missing header line)")]
    Empty,
    #[error("line {line}: best_so_far {got} does not match the running reward max {expected}")]
    BestSoFarMismatch { line: usize, got: f64, expected: f64 },
    #[error("line {line}: walk_index {got} out of order (expected {expected})")]
    OutOfOrder { line: usize, got: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunLogHeader {
    pub problem: String,
    pub method: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
    /// Optional wall-clock stamp; omitted when logs must be byte-identical
    /// across repetitions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunLogRow {
    pub walk_index: usize,
    pub pipeline: Pipeline,
    pub reward: f64,
    pub status: Status,
    pub duration: f64,
    pub best_so_far: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noiseless: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub header: RunLogHeader,
    pub rows: Vec<RunLogRow>,
}

impl RunLog {
    pub fn from_result(header: RunLogHeader, result: &OptimizationResult) -> Self {
        let rows = result
            .history
            .iter()
            .zip(&result.incumbent_curve)
            .map(|(r, (_, best))| RunLogRow {
                walk_index: r.walk_index,
                pipeline: r.pipeline.clone(),
                reward: r.reward,
                status: r.status,
                duration: r.duration,
                best_so_far: *best,
                noiseless: r.noiseless,
            })
            .collect();
        Self { header, rows }
    }

    pub fn to_string_lines(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&serde_json::to_string(row).expect("row serializes"));
            out.push('\n');
        }
        out
    }

    /// Best-so-far value at an evaluation-count checkpoint: the last row with
    /// `walk_index < checkpoint`, or 0 when the log is shorter.
    pub fn best_at(&self, checkpoint: usize) -> f64 {
        self.rows
            .iter()
            .take_while(|r| r.walk_index < checkpoint)
            .last()
            .map(|r| r.best_so_far)
            .unwrap_or(0.0)
    }
}

pub fn write_run_log(path: impl AsRef<Path>, log: &RunLog) -> Result<(), RunLogError> {
    let path = path.as_ref();
    let io_err = |source| RunLogError::Io {
        path: path.display().to_string(),
        source,
    };
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp).map_err(io_err)?;
        f.write_all(log.to_string_lines().as_bytes()).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
    }
    std::fs::rename(&tmp, path).map_err(io_err)
}

/// Parses and validates a log: rows ordered by walk index, best_so_far equal
/// to the running maximum of the reward column.
pub fn read_run_log(path: impl AsRef<Path>) -> Result<RunLog, RunLogError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| RunLogError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_run_log(&text)
}

pub fn parse_run_log(text: &str) -> Result<RunLog, RunLogError> {
    let mut lines = text.lines().enumerate();
    let (_, header_line) = lines.next().ok_or(RunLogError::Empty)?;
    let header: RunLogHeader =
        serde_json::from_str(header_line).map_err(|source| RunLogError::Json { line: 1, source })?;
    let mut rows = Vec::new();
    let mut running = f64::NEG_INFINITY;
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row: RunLogRow =
            serde_json::from_str(line).map_err(|source| RunLogError::Json { line: i + 1, source })?;
        if row.walk_index != rows.len() {
            return Err(RunLogError::OutOfOrder {
                line: i + 1,
                got: row.walk_index,
                expected: rows.len(),
            });
        }
        running = running.max(row.reward);
        if row.best_so_far != running {
            return Err(RunLogError::BestSoFarMismatch {
                line: i + 1,
                got: row.best_so_far,
                expected: running,
            });
        }
        rows.push(row);
    }
    Ok(RunLog { header, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::EvaluationRecord;
    use std::collections::BTreeMap;

    fn pipeline() -> Pipeline {
        Pipeline {
            structure: vec!["a".into()],
            theta: vec![BTreeMap::new()],
        }
    }

    fn result_with_rewards(rewards: &[f64]) -> OptimizationResult {
        let history: Vec<EvaluationRecord> = rewards
            .iter()
            .enumerate()
            .map(|(i, &r)| EvaluationRecord {
                pipeline: pipeline(),
                reward: r,
                status: Status::Ok,
                duration: 0.0,
                walk_index: i,
                noiseless: None,
            })
            .collect();
        let mut best = f64::NEG_INFINITY;
        let curve = history.iter().map(|r| {
            best = best.max(r.reward);
            (r.walk_index, best)
        });
        let curve: Vec<_> = curve.collect();
        let best_index = history
            .iter()
            .position(|r| r.reward == curve.last().unwrap().1)
            .unwrap();
        OptimizationResult {
            best: history[best_index].clone(),
            history,
            incumbent_curve: curve,
            ensemble_weights: None,
            truncated: false,
            warnings: vec![],
        }
    }

    fn header() -> RunLogHeader {
        RunLogHeader {
            problem: "p".into(),
            method: "mosaic".into(),
            seed: 3,
            budget: Some(4),
            params: None,
            started_at: None,
        }
    }

    #[test]
    fn round_trip_through_a_file() {
        let log = RunLog::from_result(header(), &result_with_rewards(&[0.2, 0.5, 0.4]));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.ldjson");
        write_run_log(&path, &log).unwrap();
        assert_eq!(read_run_log(&path).unwrap(), log);
    }

    #[test]
    fn best_so_far_column_is_validated() {
        let log = RunLog::from_result(header(), &result_with_rewards(&[0.2, 0.5]));
        let mut text = log.to_string_lines();
        text = text.replace("\"best_so_far\":0.5", "\"best_so_far\":0.4");
        assert!(matches!(
            parse_run_log(&text),
            Err(RunLogError::BestSoFarMismatch { line: 3, .. })
        ));
    }

    #[test]
    fn best_at_checkpoints() {
        let log = RunLog::from_result(header(), &result_with_rewards(&[0.2, 0.5, 0.4, 0.9]));
        assert_eq!(log.best_at(1), 0.2);
        assert_eq!(log.best_at(3), 0.5);
        assert_eq!(log.best_at(100), 0.9);
        assert_eq!(log.best_at(0), 0.0);
    }

    #[test]
    fn empty_and_malformed_logs_are_rejected() {
        assert!(matches!(parse_run_log(""), Err(RunLogError::Empty)));
        assert!(matches!(
            parse_run_log("{\"problem\":\"p\",\"method\":\"m\",\"seed\":0}\nnot json\n"),
            Err(RunLogError::Json { line: 2, .. })
        ));
    }

    #[test]
    fn header_without_timestamp_is_byte_stable() {
        let log = RunLog::from_result(header(), &result_with_rewards(&[0.3]));
        assert_eq!(log.to_string_lines(), log.to_string_lines());
        assert!(!log.to_string_lines().contains("started_at"));
    }
}
