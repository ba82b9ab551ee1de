//! Randomized checks of the approximation guarantees.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use setgreedy_core::rng::derive_seed;
use setgreedy_core::theory::{
    approx_greedy_factor, fuzz_approx_greedy_bound, fuzz_non_oblivious_bound, non_oblivious_factor, BoundHooks,
    BoundReport,
};

use crate::artifacts::{write_csv, write_json, write_run_header};
use crate::common::thread_pool;
use crate::config::{BoundKind, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub bound: String,
    pub index: usize,
    pub seed: u64,
    pub instance: String,
    pub n: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub achieved: f64,
    pub optimal: f64,
    pub factor: f64,
    pub slack: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorRow {
    pub bound: String,
    pub alpha: f64,
    pub gamma: f64,
    pub factor: f64,
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub rows: Vec<VerifyRow>,
    pub factors: Vec<FactorRow>,
    pub violations: usize,
}

/// Grid of guaranteed factors over `α, γ ∈ {0.25, 0.5, 0.75, 1}`.
pub fn factor_table() -> Vec<FactorRow> {
    let grid = [0.25, 0.5, 0.75, 1.0];
    let mut rows = Vec::new();
    for (kind, f) in [
        (BoundKind::ApproxGreedy, approx_greedy_factor as fn(f64, f64) -> f64),
        (BoundKind::NonOblivious, non_oblivious_factor),
    ] {
        for &alpha in &grid {
            for &gamma in &grid {
                rows.push(FactorRow { bound: kind.label().into(), alpha, gamma, factor: f(alpha, gamma) });
            }
        }
    }
    rows
}

fn row(kind: BoundKind, index: usize, seed: u64, r: BoundReport) -> VerifyRow {
    VerifyRow {
        bound: kind.label().into(),
        index,
        seed,
        instance: r.instance,
        n: r.n,
        alpha: r.alpha,
        gamma: r.gamma,
        achieved: r.achieved,
        optimal: r.optimal,
        factor: r.factor,
        slack: r.slack,
        violated: r.violated,
    }
}

/// Fuzzes the configured instances; any violation is dumped under
/// `violations/` and reported as [`CliError::Violation`] after all
/// artifacts are written.
pub fn run_verify(cfg: &RunConfig) -> CliResult<VerifyOutcome> {
    write_run_header(&cfg.out, "verify", cfg.seed, &cfg.to_toml())?;
    let hooks = BoundHooks { gamma_scale: cfg.verify.gamma_scale, alpha_override: cfg.verify.alpha_override };
    let jobs: Vec<(BoundKind, usize)> =
        cfg.verify.bounds.iter().flat_map(|&b| (0..cfg.verify.instances).map(move |i| (b, i))).collect();
    let pool = thread_pool(cfg.threads)?;
    let results: Vec<CliResult<VerifyRow>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(kind, i)| {
                let seed = derive_seed(cfg.seed, i as u64, kind.label());
                let report = match kind {
                    BoundKind::ApproxGreedy => fuzz_approx_greedy_bound(seed, hooks)?,
                    BoundKind::NonOblivious => fuzz_non_oblivious_bound(seed, hooks)?,
                };
                Ok(row(kind, i, seed, report))
            })
            .collect()
    });
    let rows = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    let factors = factor_table();
    write_csv(&cfg.out.join("verify.csv"), &rows)?;
    write_csv(&cfg.out.join("factors.csv"), &factors)?;
    let bad: Vec<&VerifyRow> = rows.iter().filter(|r| r.violated).collect();
    for r in &bad {
        write_json(&cfg.out.join("violations").join(format!("{}_{}.json", r.bound, r.index)), r)?;
    }
    if let Some(first) = bad.first() {
        return Err(CliError::Violation(format!(
            "{} of {} checks failed; first: {} instance {} (seed {}), slack {}",
            bad.len(),
            rows.len(),
            first.bound,
            first.index,
            first.seed,
            first.slack
        )));
    }
    let violations = bad.len();
    Ok(VerifyOutcome { rows, factors, violations })
}
