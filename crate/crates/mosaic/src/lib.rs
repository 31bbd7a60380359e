//! Pipeline search over hierarchical configuration spaces.
//!
//! The search couples two optimizers that share one random-forest surrogate:
//! a Monte-Carlo tree search over the structural decisions (which algorithm
//! at each step of the pipeline) and Bayesian optimization over the
//! hyperparameters of a chosen structure. The crate also ships a benchmark
//! harness with synthetic objectives of known optimum, random-search and
//! BO-only baselines, rank aggregation across problems, meta-learned warm
//! starts, and greedy ensemble construction over evaluated models.

pub mod bench;
pub mod ensemble;
pub mod mcts;
pub mod meta;
pub mod optimizer;
pub mod space;
pub mod surrogate;

pub use space::{Pipeline, PipelinePrefix, SearchSpace};
