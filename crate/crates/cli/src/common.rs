use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use setgreedy_core::acquisition::AcquisitionContext;
use setgreedy_core::active::Dataset;
use setgreedy_core::policy::{PolicyParams, PolicyShape};
use setgreedy_core::selection::{GreedyTrace, TrainRecord};
use setgreedy_core::surrogate::DeterministicSurrogate;
use setgreedy_core::{BigramTask, Candidate, SequenceSpace};

use crate::artifacts::CHECKPOINT_VERSION;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub fn thread_pool(threads: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config("threads", e))
}

/// Acquisition over the task itself with an empty archive.
pub fn task_context(cfg: &RunConfig, task: &BigramTask) -> CliResult<AcquisitionContext> {
    Ok(cfg.acquisition.context(Arc::new(DeterministicSurrogate(task.clone())), &Dataset::default())?)
}

pub fn render_batch(space: &SequenceSpace, batch: &[Candidate]) -> String {
    batch.iter().map(|x| space.render(x)).collect::<Vec<_>>().join("|")
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Linearly interpolated percentile (`p` in `[0, 100]`) of unsorted values.
/// Infinite values sort last and propagate when interpolated against.
pub fn percentile(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        return v[lo];
    }
    let w = pos - lo as f64;
    if v[hi].is_infinite() {
        return v[hi];
    }
    v[lo] * (1.0 - w) + v[hi] * w
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRow {
    pub update: usize,
    pub conditioning_size: usize,
    pub mean_return: f64,
    pub eval_value: Option<f64>,
    pub best_value: f64,
    pub queries: u64,
    pub wall_time_s: f64,
}

/// Observer that timestamps training records.
pub struct TrainLog {
    start: Instant,
    pub rows: Vec<TrainRow>,
}

impl TrainLog {
    pub fn new() -> Self {
        Self { start: Instant::now(), rows: Vec::new() }
    }

    pub fn record(&mut self, r: &TrainRecord) {
        self.rows.push(TrainRow {
            update: r.update,
            conditioning_size: r.conditioning_size,
            mean_return: r.mean_return,
            eval_value: r.eval_value,
            best_value: r.best_value,
            queries: r.queries,
            wall_time_s: self.start.elapsed().as_secs_f64(),
        });
    }
}

impl Default for TrainLog {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub candidate: Option<String>,
    pub gain: f64,
    pub best_gain: Option<f64>,
    pub ties: Option<usize>,
    pub size: usize,
    pub queries: u64,
}

pub fn trace_rows(space: &SequenceSpace, t: &GreedyTrace) -> Vec<TraceRow> {
    t.steps
        .iter()
        .enumerate()
        .map(|(i, s)| TraceRow {
            step: i + 1,
            candidate: s.candidate.as_ref().map(|x| space.render(x)),
            gain: s.gain,
            best_gain: s.best_gain,
            ties: s.ties,
            size: s.size,
            queries: s.queries,
        })
        .collect()
}

/// Trained policy on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCheckpoint {
    pub format_version: u32,
    pub shape: PolicyShape,
    pub params: Vec<f64>,
}

impl PolicyCheckpoint {
    pub fn new(p: &PolicyParams) -> Self {
        Self { format_version: CHECKPOINT_VERSION, shape: p.shape().clone(), params: p.data().to_vec() }
    }

    pub fn into_params(self) -> CliResult<PolicyParams> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(CliError::Config(format!(
                "policy checkpoint format {} is not the supported {CHECKPOINT_VERSION}",
                self.format_version
            )));
        }
        Ok(PolicyParams::from_data(self.shape, self.params)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_matches_linear_interpolation() {
        let xs = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&xs, 0.0), 1.0);
        assert_eq!(percentile(&xs, 100.0), 4.0);
        assert_eq!(percentile(&xs, 50.0), 2.5);
        assert!((percentile(&xs, 30.0) - 1.9).abs() < 1e-12);
        assert!((percentile(&xs, 70.0) - 3.1).abs() < 1e-12);
        assert_eq!(percentile(&[1.0, f64::INFINITY], 50.0), f64::INFINITY);
        assert_eq!(percentile(&[1.0, 2.0, f64::INFINITY], 50.0), 2.0);
    }

    #[test]
    fn mean_std_is_population() {
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 1.0));
    }
}
