//! Single-round subset selection across strategies, cardinalities and trials.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use setgreedy_core::active::Selection;
use setgreedy_core::rng::{derive_seed, stream};
use setgreedy_core::selection::{exact_greedy, SubsetProblem, TieBreak};
use setgreedy_core::Error as CoreError;

use crate::artifacts::{write_csv, write_json, write_run_header};
use crate::common::{mean_std, percentile, render_batch, task_context, thread_pool, trace_rows, PolicyCheckpoint, TrainLog};
use crate::config::{RunConfig, StrategyKind};
use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub strategy: String,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub hypervolume: f64,
    pub queries: u64,
    pub batch: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub strategy: String,
    pub n: usize,
    pub trials: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub exact_greedy: Option<f64>,
    pub median_ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SubsetOutcome {
    pub trials: Vec<TrialRow>,
    pub summary: Vec<SummaryRow>,
}

struct Job {
    kind: StrategyKind,
    n: usize,
    trial: usize,
}

struct JobResult {
    row: TrialRow,
    selection: Selection,
    log: TrainLog,
}

fn trial_tag(kind: StrategyKind, n: usize) -> String {
    format!("subset/{}/n{n}", kind.label())
}

/// Seed of one trial's stream; depends only on its own coordinates.
pub fn trial_seed(master: u64, kind: StrategyKind, n: usize, trial: usize) -> u64 {
    derive_seed(master, trial as u64, &trial_tag(kind, n))
}

/// Runs every (cardinality, strategy, trial) and writes the artifacts under
/// `cfg.out`.
pub fn run_subset(cfg: &RunConfig) -> CliResult<SubsetOutcome> {
    let task = cfg.task.build()?;
    let space = task.space().clone();
    let ctx = task_context(cfg, &task)?;
    write_run_header(&cfg.out, "subset", cfg.seed, &cfg.to_toml())?;

    let mut jobs = Vec::new();
    for &n in &cfg.cardinalities {
        for &kind in &cfg.strategies {
            for trial in 0..cfg.trials {
                jobs.push(Job { kind, n, trial });
            }
        }
    }
    let pool = thread_pool(cfg.threads)?;
    let results: Vec<CliResult<JobResult>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let seed = trial_seed(cfg.seed, job.kind, job.n, job.trial);
                let mut rng = stream(cfg.seed, job.trial as u64, &trial_tag(job.kind, job.n));
                let mut log = TrainLog::new();
                let selection =
                    cfg.strategy(job.kind, job.n).select(&ctx, &space, job.n, &mut rng, &mut |r| log.record(r))?;
                let row = TrialRow {
                    strategy: job.kind.label().into(),
                    n: job.n,
                    trial: job.trial,
                    seed,
                    hypervolume: selection.value,
                    queries: selection.queries,
                    batch: render_batch(&space, &selection.batch),
                };
                log::info!("{} n={} trial {}: hv {} after {} queries", row.strategy, row.n, row.trial, row.hypervolume, row.queries);
                Ok(JobResult { row, selection, log })
            })
            .collect()
    });
    let results = results.into_iter().collect::<CliResult<Vec<_>>>()?;

    for r in &results {
        let stem = format!("{}_n{}_t{}", r.row.strategy, r.row.n, r.row.trial);
        if let Some(t) = &r.selection.trace {
            write_csv(&cfg.out.join("traces").join(format!("{stem}.csv")), &trace_rows(&space, t))?;
        }
        if !r.log.rows.is_empty() {
            write_csv(&cfg.out.join("train").join(format!("{stem}.csv")), &r.log.rows)?;
        }
        if let Some(p) = &r.selection.params {
            write_json(&cfg.out.join("policies").join(format!("{stem}.json")), &PolicyCheckpoint::new(p))?;
        }
    }

    let mut summary = Vec::new();
    for &n in &cfg.cardinalities {
        let problem = SubsetProblem::new(ctx.clone(), space.clone(), n)?;
        let exact = match exact_greedy(&problem, TieBreak::Lexicographic, u128::from(cfg.baseline.exact_cap)) {
            Ok(t) => Some(t.value),
            Err(CoreError::CapExceeded { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        for &kind in &cfg.strategies {
            let hv: Vec<f64> = results
                .iter()
                .filter(|r| r.row.n == n && r.row.strategy == kind.label())
                .map(|r| r.row.hypervolume)
                .collect();
            let (mean, std) = mean_std(&hv);
            let median = percentile(&hv, 50.0);
            summary.push(SummaryRow {
                strategy: kind.label().into(),
                n,
                trials: hv.len(),
                mean,
                std,
                median,
                min: percentile(&hv, 0.0),
                max: percentile(&hv, 100.0),
                exact_greedy: exact,
                median_ratio: exact.filter(|&e| e > 0.0).map(|e| median / e),
            });
        }
    }
    let trials: Vec<TrialRow> = results.into_iter().map(|r| r.row).collect();
    write_csv(&cfg.out.join("subset_trials.csv"), &trials)?;
    write_csv(&cfg.out.join("subset_summary.csv"), &summary)?;
    Ok(SubsetOutcome { trials, summary })
}
