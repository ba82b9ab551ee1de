//! Multi-round active learning with per-round checkpoints and aggregation.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use setgreedy_core::acquisition::AcquisitionContext;
use setgreedy_core::active::{
    queries_to_target, random_initial_dataset, relative_hypervolume, ActiveLearner, BatchStrategy, Dataset, LoopConfig,
    Record, RoundMetrics, Selection, Strategy,
};
use setgreedy_core::rng::{derive_seed, stream, StdRng};
use setgreedy_core::surrogate::EnsembleSurrogate;
use setgreedy_core::tasks::Objective;
use setgreedy_core::{Candidate, SequenceSpace};

use crate::artifacts::{
    read_json, trial_dir, write_csv, write_json, write_jsonl, write_run_header, CHECKPOINT_VERSION,
};
use crate::common::{percentile, thread_pool, PolicyCheckpoint, TrainLog};
use crate::config::{Mode, RunConfig, StrategyKind};
use crate::error::{CliError, CliResult};

/// Saved state of one trial after its latest completed round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlCheckpoint {
    pub format_version: u32,
    pub strategy: String,
    pub trial: usize,
    pub records: Vec<Record>,
    pub metrics: Vec<RoundMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub round: usize,
    pub candidate: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub strategy: String,
    pub trial: usize,
    pub round: usize,
    pub queries: usize,
    pub total_queries: usize,
    pub hypervolume: f64,
    pub relative_hypervolume: f64,
    pub relative_is_absolute: bool,
    pub proposed: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub strategy: String,
    pub queries: usize,
    pub total_queries: usize,
    pub trials: usize,
    pub hv_p30: f64,
    pub hv_p50: f64,
    pub hv_p70: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRow {
    pub strategy: String,
    pub fraction: f64,
    pub target: f64,
    pub trials_reached: usize,
    pub median_queries: Option<f64>,
    pub reference_strategy: String,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub strategy: StrategyKind,
    pub trial: usize,
    pub dataset: Dataset,
    pub metrics: Vec<RoundMetrics>,
}

#[derive(Debug, Clone)]
pub struct AlOutcome {
    pub trials: Vec<TrialOutcome>,
    /// Empty unless every trial finished.
    pub curves: Vec<CurveRow>,
    pub targets: Vec<TargetRow>,
    pub finished: bool,
}

/// Strategy wrapper keeping what the latest selection produced.
struct Recording {
    strategy: Strategy,
    last: Option<Selection>,
    log: TrainLog,
}

impl BatchStrategy for Recording {
    fn name(&self) -> String {
        self.strategy.label().into()
    }

    fn propose(
        &mut self,
        _round: usize,
        ctx: &AcquisitionContext,
        space: &SequenceSpace,
        n: usize,
        rng: &mut StdRng,
    ) -> setgreedy_core::Result<Vec<Candidate>> {
        self.log = TrainLog::new();
        let log = &mut self.log;
        let sel = self.strategy.select(ctx, space, n, rng, &mut |r| log.record(r))?;
        let batch = sel.batch.clone();
        self.last = Some(sel);
        Ok(batch)
    }
}

fn loop_config(cfg: &RunConfig, trial: usize) -> LoopConfig {
    LoopConfig {
        rounds: cfg.al.rounds,
        batch_size: cfg.al.batch_size,
        surrogate: cfg.surrogate.clone(),
        acquisition: cfg.acquisition.clone(),
        seed: derive_seed(cfg.seed, trial as u64, "al"),
    }
}

fn metrics_rows(kind: StrategyKind, trial: usize, metrics: &[RoundMetrics]) -> CliResult<Vec<MetricsRow>> {
    let rel = relative_hypervolume(metrics, 0)?;
    Ok(metrics
        .iter()
        .zip(&rel.values)
        .map(|(m, &r)| MetricsRow {
            strategy: kind.label().into(),
            trial,
            round: m.round,
            queries: m.queries,
            total_queries: m.total_queries,
            hypervolume: m.hypervolume,
            relative_hypervolume: r,
            relative_is_absolute: rel.absolute,
            proposed: m.proposed,
            duplicates: m.duplicates,
        })
        .collect())
}

fn save_state(dir: &Path, kind: StrategyKind, trial: usize, space: &SequenceSpace, learner: &ActiveLearner) -> CliResult<()> {
    let rows: Vec<DatasetRow> = learner
        .dataset()
        .records()
        .iter()
        .map(|r| DatasetRow { round: r.round, candidate: space.render(&r.candidate), values: r.values.as_slice().to_vec() })
        .collect();
    write_jsonl(&dir.join("dataset.jsonl"), &rows)?;
    write_csv(&dir.join("metrics.csv"), &metrics_rows(kind, trial, learner.metrics())?)?;
    write_json(
        &dir.join("checkpoint.json"),
        &AlCheckpoint {
            format_version: CHECKPOINT_VERSION,
            strategy: kind.label().into(),
            trial,
            records: learner.dataset().records().to_vec(),
            metrics: learner.metrics().to_vec(),
        },
    )
}

#[derive(Serialize)]
struct SurrogateCheckpoint<'a> {
    format_version: u32,
    round: usize,
    surrogate: &'a EnsembleSurrogate,
}

fn run_trial(
    cfg: &RunConfig,
    kind: StrategyKind,
    trial: usize,
    resume: bool,
    stop_after: Option<usize>,
) -> CliResult<TrialOutcome> {
    let task = cfg.task.build()?;
    let space = task.space().clone();
    let oracle: Arc<dyn Objective> = Arc::new(task.clone());
    let dir = trial_dir(&cfg.out, kind.label(), trial);
    let ckpt_path = dir.join("checkpoint.json");
    let lc = loop_config(cfg, trial);
    let mut learner = if resume && ckpt_path.exists() {
        let ck: AlCheckpoint = read_json(&ckpt_path)?;
        if ck.format_version != CHECKPOINT_VERSION || ck.strategy != kind.label() || ck.trial != trial {
            return Err(CliError::Config(format!("{}: checkpoint does not belong to this trial", ckpt_path.display())));
        }
        ActiveLearner::resume(oracle, space.clone(), lc, Dataset::from_records(ck.records)?, ck.metrics)?
    } else {
        let mut rng = stream(cfg.seed, trial as u64, "al/initial");
        let init = random_initial_dataset(&task, &space, cfg.al.initial, &mut rng)?;
        let l = ActiveLearner::new(oracle, space.clone(), lc, init)?;
        save_state(&dir, kind, trial, &space, &l)?;
        l
    };
    let mut strategy =
        Recording { strategy: cfg.strategy(kind, cfg.al.batch_size), last: None, log: TrainLog::new() };
    while !learner.finished() && stop_after.is_none_or(|s| learner.next_round() <= s) {
        let m = learner.step(&mut strategy)?;
        log::info!("{} trial {trial} round {}: hv {} after {} queries", kind.label(), m.round, m.hypervolume, m.total_queries);
        if let Some(sel) = strategy.last.take() {
            if let Some(p) = &sel.params {
                write_json(&dir.join(format!("policy_r{}.json", m.round)), &PolicyCheckpoint::new(p))?;
            }
        }
        if !strategy.log.rows.is_empty() {
            write_csv(&dir.join(format!("train_r{}.csv", m.round)), &strategy.log.rows)?;
        }
        if let Some(s) = learner.last_ensemble() {
            write_json(
                &dir.join(format!("surrogate_r{}.json", m.round)),
                &SurrogateCheckpoint { format_version: CHECKPOINT_VERSION, round: m.round, surrogate: s },
            )?;
        }
        save_state(&dir, kind, trial, &space, &learner)?;
    }
    Ok(TrialOutcome { strategy: kind, trial, dataset: learner.dataset().clone(), metrics: learner.metrics().to_vec() })
}

/// Hypervolume at `q` post-initialization queries: the best recorded value
/// with at most `q` queries.
fn hv_at(metrics: &[RoundMetrics], q: usize) -> f64 {
    metrics.iter().filter(|m| m.queries <= q).map(|m| m.hypervolume).fold(0.0, f64::max)
}

fn aggregate(cfg: &RunConfig, trials: &[TrialOutcome]) -> (Vec<CurveRow>, Vec<TargetRow>) {
    let of = |kind: StrategyKind| trials.iter().filter(move |t| t.strategy == kind);
    let mut curves = Vec::new();
    for &kind in &cfg.strategies {
        for r in 0..=cfg.al.rounds {
            let q = r * cfg.al.batch_size;
            let hv: Vec<f64> = of(kind).map(|t| hv_at(&t.metrics, q)).collect();
            curves.push(CurveRow {
                strategy: kind.label().into(),
                queries: q,
                total_queries: q + cfg.al.initial,
                trials: hv.len(),
                hv_p30: percentile(&hv, 30.0),
                hv_p50: percentile(&hv, 50.0),
                hv_p70: percentile(&hv, 70.0),
            });
        }
    }
    let final_median = |kind: StrategyKind| {
        let hv: Vec<f64> = of(kind).map(|t| t.metrics.last().map_or(0.0, |m| m.hypervolume)).collect();
        percentile(&hv, 50.0)
    };
    let best = cfg.strategies.iter().map(|&k| final_median(k)).fold(0.0, f64::max);
    let reference = cfg.strategies[0];
    let median_queries = |kind: StrategyKind, target: f64| {
        let qs: Vec<f64> =
            of(kind).map(|t| queries_to_target(&t.metrics, target).map_or(f64::INFINITY, |q| q as f64)).collect();
        let reached = qs.iter().filter(|q| q.is_finite()).count();
        let med = percentile(&qs, 50.0);
        (reached, med.is_finite().then_some(med))
    };
    let mut targets = Vec::new();
    for &f in &cfg.al.target_fractions {
        let target = f * best;
        let (_, ref_med) = median_queries(reference, target);
        for &kind in &cfg.strategies {
            let (reached, med) = median_queries(kind, target);
            targets.push(TargetRow {
                strategy: kind.label().into(),
                fraction: f,
                target,
                trials_reached: reached,
                median_queries: med,
                reference_strategy: reference.label().into(),
                ratio: match (ref_med, med) {
                    (Some(r), Some(m)) if m > 0.0 => Some(r / m),
                    (Some(r), Some(m)) if r == m => Some(1.0),
                    _ => None,
                },
            });
        }
    }
    (curves, targets)
}

/// Runs (or continues, with `resume`) every trial of every strategy.
/// `stop_after` halts each trial after that round without aggregating.
pub fn run_al(cfg: &RunConfig, resume: bool, stop_after: Option<usize>) -> CliResult<AlOutcome> {
    if !resume {
        write_run_header(&cfg.out, "al", cfg.seed, &cfg.to_toml())?;
    }
    let jobs: Vec<(StrategyKind, usize)> =
        cfg.strategies.iter().flat_map(|&k| (0..cfg.trials).map(move |t| (k, t))).collect();
    let pool = thread_pool(cfg.threads)?;
    let results: Vec<CliResult<TrialOutcome>> =
        pool.install(|| jobs.par_iter().map(|&(k, t)| run_trial(cfg, k, t, resume, stop_after)).collect());
    let trials = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    let finished = trials.iter().all(|t| t.metrics.last().is_some_and(|m| m.round >= cfg.al.rounds));
    let (curves, targets) = if finished { aggregate(cfg, &trials) } else { (Vec::new(), Vec::new()) };
    if finished {
        let all: Vec<MetricsRow> = trials
            .iter()
            .map(|t| metrics_rows(t.strategy, t.trial, &t.metrics))
            .collect::<CliResult<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        write_csv(&cfg.out.join("al_metrics.csv"), &all)?;
        write_csv(&cfg.out.join("al_curves.csv"), &curves)?;
        write_csv(&cfg.out.join("queries_to_target.csv"), &targets)?;
    }
    Ok(AlOutcome { trials, curves, targets, finished })
}

/// Loads the resolved config of an existing run directory for resuming.
pub fn load_run_config(dir: &Path) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(&dir.join("config.toml"))?;
    if cfg.mode != Some(Mode::Al) {
        return Err(CliError::Config(format!("mode: {} is not an active-learning run", dir.display())));
    }
    cfg.out = PathBuf::from(dir);
    Ok(cfg)
}
