//! Command-line front end: single runs, full benchmark grids, rank
//! aggregation over run logs, space validation, and warm-start archives.
//!
//! Exit codes: 0 on success, 2 on validation failure (bad space, bad
//! parameters, incomplete grids, malformed inputs).

use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use mosaic::bench::baselines::{run_baseline_bo, run_baseline_random};
use mosaic::bench::external::ExternalEvaluator;
use mosaic::bench::rank::aggregate_ranks;
use mosaic::bench::runlog::{read_run_log, write_run_log, RunLog, RunLogHeader};
use mosaic::bench::suite::{build_archive, make_suite, meta_features, SyntheticProblem};
use mosaic::mcts::SelectionRule;
use mosaic::meta::{load_archive, save_archive, Archive};
use mosaic::optimizer::{Budget, Evaluator, InitMode, OptimizationResult, OptimizerParams};
use mosaic::space::load_space;
use mosaic::SearchSpace;

/// Suites built by the CLI always use this construction seed, so log files
/// from different invocations refer to the same problem instances.
const SUITE_SEED: u64 = 0;

#[derive(Parser)]
#[command(name = "mosaic", version, about = "Pipeline search over hierarchical configuration spaces")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one method on one problem and write its run log.
    Run(RunArgs),
    /// Run the full (problem, method, seed) grid of a suite in parallel.
    Suite(SuiteArgs),
    /// Aggregate run logs into a cross-problem rank table (CSV).
    Rank(RankArgs),
    /// Check a search-space file; exits 2 with a report when invalid.
    ValidateSpace {
        #[arg(long)]
        space: PathBuf,
    },
    /// Build or inspect a warm-start archive.
    Archive {
        #[command(subcommand)]
        cmd: ArchiveCmd,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Mosaic,
    MosaicUcb,
    Random,
    Bo,
}

impl Method {
    fn as_str(self) -> &'static str {
        match self {
            Method::Mosaic => "mosaic",
            Method::MosaicUcb => "mosaic-ucb",
            Method::Random => "random",
            Method::Bo => "bo",
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Suite holding the problem (synthetic objective).
    #[arg(long, conflicts_with = "space")]
    suite: Option<String>,
    /// Problem id within the suite.
    #[arg(long, requires = "suite")]
    problem: Option<String>,
    /// Search-space file; the objective then comes from --eval-cmd.
    #[arg(long, requires = "eval_cmd")]
    space: Option<PathBuf>,
    /// External evaluator command (pipeline JSON on stdin, {"reward": ...} on
    /// stdout). Greedy: everything after it is part of the command, so pass
    /// it last.
    #[arg(long = "eval-cmd", num_args = 1.., allow_hyphen_values = true)]
    eval_cmd: Vec<String>,
    #[arg(long, value_enum, default_value_t = Method::Mosaic)]
    method: Method,
    /// Evaluation budget.
    #[arg(long)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON object overriding search/optimizer parameters,
    /// e.g. '{"c_ucb": 0.5, "kappa": 2}'.
    #[arg(long)]
    params: Option<String>,
    /// Warm-start archive (suite problems only).
    #[arg(long)]
    archive: Option<PathBuf>,
    /// Run-log output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, default_value = "desk100")]
    suite: String,
    /// Methods to compare; repeat the flag to add more.
    #[arg(long, value_enum, default_values_t = [Method::Mosaic, Method::Random, Method::Bo])]
    method: Vec<Method>,
    #[arg(long)]
    budget: usize,
    /// First seed of the grid.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of seeds per (problem, method) cell.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long)]
    params: Option<String>,
    /// Directory receiving one log file per grid cell.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RankArgs {
    /// Directory of run logs (*.ldjson) or individual log files.
    #[arg(required = true)]
    logs: Vec<PathBuf>,
    /// Budget checkpoints, e.g. --checkpoints 50,150,300. Defaults to the
    /// longest log's evaluation count.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Vec<usize>,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ArchiveCmd {
    /// Run the search on every suite problem and store the best pipelines.
    Build {
        #[arg(long, default_value = "desk100")]
        suite: String,
        #[arg(long, default_value_t = 100)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print an archive summary.
    Inspect {
        #[arg(long)]
        archive: PathBuf,
    },
}

fn fail(msg: impl std::fmt::Display) -> ! {
    eprintln!("error: {msg}");
    std::process::exit(2);
}

fn apply_param_overrides(params: &mut OptimizerParams, text: &str) {
    let value: serde_json::Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => fail(format!("--params is not valid JSON: {e}")),
    };
    let Some(map) = value.as_object() else {
        fail("--params must be a JSON object");
    };
    let num = |v: &serde_json::Value, key: &str| -> f64 {
        v.as_f64()
            .unwrap_or_else(|| fail(format!("--params key `{key}` must be a number")))
    };
    for (key, v) in map {
        match key.as_str() {
            "c_ucb" => params.search.c_ucb = num(v, key),
            "pw" => params.search.pw = num(v, key),
            "eps" => params.search.eps = num(v, key),
            "n_s" => params.search.n_s = num(v, key) as usize,
            "n_r" => params.search.n_r = num(v, key) as usize,
            "neighbor_count" => params.search.neighbor_count = num(v, key) as usize,
            "pi_refresh_interval" => params.search.pi_refresh_interval = num(v, key) as u64,
            "pi_over_all_actions" => {
                params.search.pi_over_all_actions = v
                    .as_bool()
                    .unwrap_or_else(|| fail("--params key `pi_over_all_actions` must be a bool"))
            }
            "kappa" => params.kappa = num(v, key) as usize,
            "eval_cutoff_secs" => params.eval_cutoff = Duration::from_secs_f64(num(v, key)),
            "ensemble" => {
                params.ensemble = v
                    .as_bool()
                    .unwrap_or_else(|| fail("--params key `ensemble` must be a bool"))
            }
            "ensemble_max_size" => params.ensemble_max_size = num(v, key) as usize,
            other => fail(format!("--params key `{other}` is not a known parameter")),
        }
    }
}

fn build_params(budget: usize, seed: u64, method: Method, overrides: Option<&str>) -> OptimizerParams {
    let mut params = OptimizerParams::new(Budget::evaluations(budget), seed);
    if let Some(text) = overrides {
        apply_param_overrides(&mut params, text);
    }
    if method == Method::MosaicUcb {
        params.search.selection_rule = SelectionRule::Ucb;
    }
    params
}

fn run_method(
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    method: Method,
    params: &OptimizerParams,
) -> Result<OptimizationResult, mosaic::optimizer::OptimizerError> {
    match method {
        Method::Mosaic | Method::MosaicUcb => mosaic::optimizer::run(space, evaluator, params),
        Method::Bo => run_baseline_bo(space, evaluator, params),
        Method::Random => run_baseline_random(
            space,
            evaluator,
            params.budget.max_evaluations.expect("evaluation budget"),
            params.eval_cutoff,
            params.seed,
        ),
    }
}

fn load_suite(name: &str) -> Vec<SyntheticProblem> {
    match make_suite(name, SUITE_SEED) {
        Ok(p) => p,
        Err(e) => fail(e),
    }
}

fn emit_log(out: Option<&Path>, log: &RunLog) {
    match out {
        Some(path) => {
            if let Err(e) = write_run_log(path, log) {
                fail(e);
            }
        }
        None => print!("{}", log.to_string_lines()),
    }
}

fn cmd_run(args: RunArgs) {
    let mut params = build_params(args.budget, args.seed, args.method, args.params.as_deref());
    let header_params = args
        .params
        .as_deref()
        .map(|t| serde_json::from_str(t).expect("validated above"));

    let (problem_name, result) = if let Some(space_path) = &args.space {
        if args.archive.is_some() {
            fail("--archive needs a suite problem (meta-features are unknown for external spaces)");
        }
        let space = match load_space(space_path) {
            Ok(s) => s,
            Err(e) => fail(e),
        };
        let evaluator = match ExternalEvaluator::new(&args.eval_cmd, None) {
            Ok(e) => e,
            Err(e) => fail(e),
        };
        let name = space_path.display().to_string();
        match run_method(&space, &evaluator, args.method, &params) {
            Ok(r) => (name, r),
            Err(e) => fail(e),
        }
    } else {
        let suite = args.suite.as_deref().unwrap_or_else(|| {
            fail("either --suite/--problem or --space/--eval-cmd is required")
        });
        let problems = load_suite(suite);
        let id = args
            .problem
            .as_deref()
            .unwrap_or_else(|| fail("--problem is required with --suite"));
        let problem = problems
            .iter()
            .find(|p| p.dataset_id == id)
            .unwrap_or_else(|| {
                let known: Vec<_> = problems.iter().map(|p| p.dataset_id.as_str()).collect();
                fail(format!("unknown problem `{id}`; suite has {known:?}"))
            });
        if let Some(archive_path) = &args.archive {
            let archive = match load_archive(archive_path) {
                Ok(a) => a,
                Err(e) => fail(e),
            };
            params.init_mode = InitMode::MetaLearning {
                k: 25,
                archive: archive.without(&problem.dataset_id),
                meta: meta_features(problem),
            };
        }
        let evaluator = problem.evaluator(args.seed);
        match run_method(&problem.space, &evaluator, args.method, &params) {
            Ok(r) => (problem.dataset_id.clone(), r),
            Err(e) => fail(e),
        }
    };

    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let header = RunLogHeader {
        problem: problem_name,
        method: args.method.as_str().to_string(),
        seed: args.seed,
        budget: Some(args.budget),
        params: header_params,
        started_at: None,
    };
    let log = RunLog::from_result(header, &result);
    emit_log(args.out.as_deref(), &log);
    eprintln!(
        "best reward {:.4} at evaluation {} ({} evaluations total)",
        result.best.reward,
        result.best.walk_index,
        result.history.len()
    );
}

fn cmd_suite(args: SuiteArgs) {
    let problems = load_suite(&args.suite);
    if args.seeds == 0 {
        fail("--seeds must be at least 1");
    }
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        fail(format!("cannot create `{}`: {e}", args.out.display()));
    }
    // validate overrides once up front so a bad --params fails before any work
    build_params(args.budget, 0, Method::Mosaic, args.params.as_deref());
    let header_params: Option<serde_json::Value> = args
        .params
        .as_deref()
        .map(|t| serde_json::from_str(t).expect("validated above"));

    let mut cells = Vec::new();
    for problem in &problems {
        for &method in &args.method {
            for s in 0..args.seeds {
                cells.push((problem, method, args.seed + s));
            }
        }
    }
    let failures: Vec<String> = cells
        .par_iter()
        .filter_map(|&(problem, method, seed)| {
            let params = build_params(args.budget, seed, method, args.params.as_deref());
            let evaluator = problem.evaluator(seed);
            let result = match run_method(&problem.space, &evaluator, method, &params) {
                Ok(r) => r,
                Err(e) => return Some(format!("{}/{}/seed {seed}: {e}", problem.dataset_id, method.as_str())),
            };
            let header = RunLogHeader {
                problem: problem.dataset_id.clone(),
                method: method.as_str().to_string(),
                seed,
                budget: Some(args.budget),
                params: header_params.clone(),
                started_at: None,
            };
            let log = RunLog::from_result(header, &result);
            let file = args.out.join(format!(
                "{}__{}__{seed}.ldjson",
                problem.dataset_id,
                method.as_str()
            ));
            match write_run_log(&file, &log) {
                Ok(()) => None,
                Err(e) => Some(e.to_string()),
            }
        })
        .collect();
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("error: {f}");
        }
        std::process::exit(2);
    }
    eprintln!(
        "wrote {} run logs to {}",
        cells.len(),
        args.out.display()
    );
}

fn collect_logs(paths: &[PathBuf]) -> Vec<RunLog> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let entries = match std::fs::read_dir(path) {
                Ok(e) => e,
                Err(e) => fail(format!("cannot read `{}`: {e}", path.display())),
            };
            for entry in entries.flatten() {
                let p = entry.path();
                if p.extension().and_then(|e| e.to_str()) == Some("ldjson") {
                    files.push(p);
                }
            }
        } else {
            files.push(path.clone());
        }
    }
    files.sort();
    files
        .iter()
        .map(|f| match read_run_log(f) {
            Ok(l) => l,
            Err(e) => fail(format!("{}: {e}", f.display())),
        })
        .collect()
}

fn cmd_rank(args: RankArgs) {
    let logs = collect_logs(&args.logs);
    let checkpoints = if args.checkpoints.is_empty() {
        let longest = logs.iter().map(|l| l.rows.len()).max().unwrap_or(0);
        vec![longest]
    } else {
        args.checkpoints.clone()
    };
    let table = match aggregate_ranks(&logs, &checkpoints) {
        Ok(t) => t,
        Err(e) => fail(e),
    };
    let csv = table.to_csv();
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &csv) {
                fail(format!("cannot write `{}`: {e}", path.display()));
            }
        }
        None => print!("{csv}"),
    }
}

fn cmd_validate_space(path: &Path) {
    let space = match load_space(path) {
        Ok(s) => s,
        Err(e) => fail(e),
    };
    let report = space.validate();
    if !report.is_empty() {
        for issue in &report {
            eprintln!("invalid: {issue}");
        }
        std::process::exit(2);
    }
    println!(
        "ok: {} steps, {} structures, encoding dimension {}",
        space.depth(),
        space.enumerate_structures().len(),
        space.encoding_dim()
    );
}

fn cmd_archive(cmd: ArchiveCmd) {
    match cmd {
        ArchiveCmd::Build {
            suite,
            budget,
            seed,
            out,
        } => {
            let problems = load_suite(&suite);
            let archive = match build_archive(&problems, budget, seed) {
                Ok(a) => a,
                Err(e) => fail(e),
            };
            if let Err(e) = save_archive(&archive, &out) {
                fail(e);
            }
            eprintln!("archived {} entries to {}", archive.entries.len(), out.display());
        }
        ArchiveCmd::Inspect { archive } => {
            let archive: Archive = match load_archive(&archive) {
                Ok(a) => a,
                Err(e) => fail(e),
            };
            println!("features: {}", archive.feature_names.join(", "));
            println!("entries: {}", archive.entries.len());
            for e in &archive.entries {
                println!(
                    "  {}  reward {:.4}  structure [{}]",
                    e.id,
                    e.reward,
                    e.pipeline.structure.join(" -> ")
                );
            }
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Suite(args) => cmd_suite(args),
        Cmd::Rank(args) => cmd_rank(args),
        Cmd::ValidateSpace { space } => cmd_validate_space(&space),
        Cmd::Archive { cmd } => cmd_archive(cmd),
    }
}
