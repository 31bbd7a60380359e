//! Cross-problem rank aggregation: at each budget checkpoint, methods are
//! ranked per problem by their seed-mean best-so-far reward (rank 1 = best,
//! ties share the mean rank) and the ranks are averaged over problems.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::bench::runlog::RunLog;

#[derive(Debug, Error)]
pub enum RankError {
    #[error("no logs to aggregate")]
    NoLogs,
    #[error("incomplete grid: missing cells {0:?}")]
    IncompleteGrid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub methods: Vec<String>,
    pub checkpoints: Vec<usize>,
    /// `avg_rank[checkpoint_index][method_index]`.
    pub avg_rank: Vec<Vec<f64>>,
    /// `mean_reward[checkpoint_index][method_index][problem]`.
    pub mean_reward: Vec<Vec<BTreeMap<String, f64>>>,
}

impl RankTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,checkpoint,avg_rank\n");
        for (ci, cp) in self.checkpoints.iter().enumerate() {
            for (mi, m) in self.methods.iter().enumerate() {
                out.push_str(&format!("{m},{cp},{}\n", self.avg_rank[ci][mi]));
            }
        }
        out
    }
}

/// Ranks for a slice of scores, higher score = better (rank 1); equal scores
/// share the mean of the ranks they span.
pub fn shared_ranks(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // positions i..=j share the mean rank
        let shared = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

pub fn aggregate_ranks(logs: &[RunLog], checkpoints: &[usize]) -> Result<RankTable, RankError> {
    if logs.is_empty() {
        return Err(RankError::NoLogs);
    }
    let methods: Vec<String> = logs
        .iter()
        .map(|l| l.header.method.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let problems: Vec<String> = logs
        .iter()
        .map(|l| l.header.problem.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let seeds: BTreeSet<u64> = logs.iter().map(|l| l.header.seed).collect();

    // every (problem, method, seed) cell must be present exactly once
    let mut missing = Vec::new();
    let mut cells: BTreeMap<(&str, &str, u64), &RunLog> = BTreeMap::new();
    for log in logs {
        cells.insert(
            (log.header.problem.as_str(), log.header.method.as_str(), log.header.seed),
            log,
        );
    }
    for p in &problems {
        for m in &methods {
            for &s in &seeds {
                if !cells.contains_key(&(p.as_str(), m.as_str(), s)) {
                    missing.push(format!("{p}/{m}/seed {s}"));
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(RankError::IncompleteGrid(missing));
    }

    let mut avg_rank = Vec::with_capacity(checkpoints.len());
    let mut mean_reward = Vec::with_capacity(checkpoints.len());
    for &cp in checkpoints {
        let mut rank_sums = vec![0.0; methods.len()];
        let mut rewards_at_cp: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); methods.len()];
        for p in &problems {
            let means: Vec<f64> = methods
                .iter()
                .map(|m| {
                    let sum: f64 = seeds
                        .iter()
                        .map(|&s| cells[&(p.as_str(), m.as_str(), s)].best_at(cp))
                        .sum();
                    sum / seeds.len() as f64
                })
                .collect();
            for (mi, r) in shared_ranks(&means).into_iter().enumerate() {
                rank_sums[mi] += r;
                rewards_at_cp[mi].insert(p.clone(), means[mi]);
            }
        }
        avg_rank.push(rank_sums.into_iter().map(|s| s / problems.len() as f64).collect());
        mean_reward.push(rewards_at_cp);
    }
    Ok(RankTable {
        methods,
        checkpoints: checkpoints.to_vec(),
        avg_rank,
        mean_reward,
    })
}
