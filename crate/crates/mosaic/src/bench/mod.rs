//! Benchmark harness: synthetic problem suite, baseline optimizers, run
//! logs, rank aggregation, and significance testing.

pub mod baselines;
pub mod external;
pub mod mwu;
pub mod rank;
pub mod runlog;
pub mod suite;
