//! Evaluation-only greedy sampling from a saved policy.

use std::path::Path;

use setgreedy_core::selection::greedy_sample;
use setgreedy_core::rng::stream;

use crate::artifacts::read_json;
use crate::common::{render_batch, task_context, PolicyCheckpoint};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// `GS(a, θ, n, samples)` under the config's task and acquisition.
pub fn run_sample(cfg: &RunConfig, policy: &Path, n: usize, samples: usize) -> CliResult<(String, f64)> {
    let params = read_json::<PolicyCheckpoint>(policy)?.into_params()?;
    let task = cfg.task.build()?;
    if params.shape().space != *task.space() {
        return Err(CliError::Config("task: policy checkpoint was trained on a different space".into()));
    }
    let ctx = task_context(cfg, &task)?;
    let mut rng = stream(cfg.seed, 0, "sample");
    let trace = greedy_sample(&ctx, &params, n, samples, &mut rng)?;
    Ok((render_batch(task.space(), &trace.subset), trace.value))
}
