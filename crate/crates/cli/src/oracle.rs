//! Exact and Monte-Carlo hypervolume, and exhaustive optima of a task.

use serde::{Deserialize, Serialize};
use setgreedy_core::pareto::{hypervolume, monte_carlo_hypervolume, optimal_subset_hypervolume};
use setgreedy_core::rng::stream;
use setgreedy_core::selection::{exact_greedy, SubsetProblem, TieBreak};
use setgreedy_core::tasks::Objective;
use setgreedy_core::ObjectiveVector;

use crate::artifacts::{write_json, write_run_header};
use crate::common::task_context;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontReport {
    pub exact: f64,
    pub monte_carlo: f64,
    pub sigma: f64,
    pub samples: u64,
    pub within_3_sigma: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumReport {
    pub n: usize,
    pub optimal: f64,
    pub subset: Vec<String>,
    pub exact_greedy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub front: Option<FrontReport>,
    pub optima: Vec<OptimumReport>,
}

pub fn parse_points(front: &[Vec<f64>]) -> CliResult<Vec<ObjectiveVector>> {
    front
        .iter()
        .map(|p| ObjectiveVector::new(p.clone()).map_err(|e| CliError::config("oracle.front", e)))
        .collect()
}

pub fn run_oracle(cfg: &RunConfig) -> CliResult<OracleReport> {
    write_run_header(&cfg.out, "oracle", cfg.seed, &cfg.to_toml())?;
    let front = if cfg.oracle.front.is_empty() {
        None
    } else {
        let pts = parse_points(&cfg.oracle.front)?;
        let reference = cfg
            .acquisition
            .reference_point(pts[0].dim())
            .map_err(|e| CliError::config("acquisition.reference", e))?;
        let exact = hypervolume(&pts, &reference).map_err(|e| CliError::config("oracle.front", e))?;
        let mut rng = stream(cfg.seed, 0, "oracle/mc");
        let (mc, sigma) = monte_carlo_hypervolume(&pts, &reference, cfg.oracle.mc_samples as usize, &mut rng)?;
        Some(FrontReport {
            exact,
            monte_carlo: mc,
            sigma,
            samples: cfg.oracle.mc_samples,
            within_3_sigma: (exact - mc).abs() <= 3.0 * sigma,
        })
    };
    let mut optima = Vec::new();
    if !cfg.oracle.subset_sizes.is_empty() {
        let task = cfg.task.build()?;
        let space = task.space();
        let cap = u128::from(cfg.oracle.cap);
        let xs = space.enumerate_all(cap)?;
        let images = xs.iter().map(|x| task.evaluate(x)).collect::<Result<Vec<_>, _>>()?;
        let reference = cfg.acquisition.reference_point(task.num_objectives())?;
        let ctx = task_context(cfg, &task)?;
        for &n in &cfg.oracle.subset_sizes {
            let (optimal, idx) = optimal_subset_hypervolume(&images, &reference, n, cap)?;
            let greedy = exact_greedy(&SubsetProblem::new(ctx.clone(), space.clone(), n)?, TieBreak::Lexicographic, cap)?;
            optima.push(OptimumReport {
                n,
                optimal,
                subset: idx.iter().map(|&i| space.render(&xs[i])).collect(),
                exact_greedy: greedy.value,
            });
        }
    }
    let report = OracleReport { front, optima };
    write_json(&cfg.out.join("oracle.json"), &report)?;
    Ok(report)
}
