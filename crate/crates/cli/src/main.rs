use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use setgreedy_cli::al::{load_run_config, run_al};
use setgreedy_cli::oracle::run_oracle;
use setgreedy_cli::sample::run_sample;
use setgreedy_cli::subset::run_subset;
use setgreedy_cli::verify::run_verify;
use setgreedy_cli::{CliError, CliResult, Mode, Overrides, RunConfig};
use setgreedy_core::pareto::{hypervolume, ReferencePoint};
use setgreedy_core::ObjectiveVector;

#[derive(Parser)]
#[command(name = "setgreedy", version, about = "Greedy-policy batch selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory (overrides SETGREEDY_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides SETGREEDY_THREADS).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Single-round subset selection.
    Subset(Common),
    /// Multi-round active learning.
    Al {
        #[command(flatten)]
        common: Common,
        /// Continue the run stored in this directory.
        #[arg(long, conflicts_with = "config")]
        resume: Option<PathBuf>,
        /// Stop every trial after this round.
        #[arg(long)]
        stop_after: Option<usize>,
    },
    /// Fuzz the approximation guarantees.
    Verify(Common),
    /// Exact and Monte-Carlo hypervolume and exhaustive optima.
    Oracle(Common),
    /// Hypervolume of points such as `3,1 2,2 1,3`.
    Hv {
        points: Vec<String>,
        /// Reference point; the origin by default.
        #[arg(long = "ref")]
        reference: Option<String>,
    },
    /// Greedy sampling from a saved policy checkpoint.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 16)]
        samples: usize,
    },
}

fn resolve(common: &Common, mode: Mode) -> CliResult<RunConfig> {
    let base = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let overrides =
        Overrides { seed: common.seed, trials: common.trials, out: common.out.clone(), threads: common.threads };
    base.resolve(mode, &overrides, |k| std::env::var(k).ok())
}

fn parse_vector(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Config(format!("points: {s:?} is not a comma-separated vector"))))
        .collect()
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Subset(c) => {
            let cfg = resolve(&c, Mode::Subset)?;
            let out = run_subset(&cfg)?;
            for s in &out.summary {
                println!(
                    "{} n={} mean={:.6} std={:.6} median={:.6}{}",
                    s.strategy,
                    s.n,
                    s.mean,
                    s.std,
                    s.median,
                    s.median_ratio.map_or(String::new(), |r| format!(" ratio={r:.4}"))
                );
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Al { common, resume, stop_after } => {
            let (cfg, resuming) = match resume {
                Some(dir) => {
                    let overrides = Overrides { threads: common.threads, ..Default::default() };
                    let mut cfg = load_run_config(&dir)?.resolve(Mode::Al, &overrides, |k| {
                        (k == setgreedy_cli::config::ENV_THREADS).then(|| std::env::var(k).ok()).flatten()
                    })?;
                    cfg.out = dir;
                    (cfg, true)
                }
                None => (resolve(&common, Mode::Al)?, false),
            };
            let out = run_al(&cfg, resuming, stop_after)?;
            if out.finished {
                for c in out.curves.iter().filter(|c| c.queries == cfg.al.rounds * cfg.al.batch_size) {
                    println!("{} queries={} hv_p50={:.6}", c.strategy, c.queries, c.hv_p50);
                }
            } else {
                println!("stopped early; resume with `setgreedy al --resume {}`", cfg.out.display());
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Verify(c) => {
            let cfg = resolve(&c, Mode::Verify)?;
            let out = run_verify(&cfg)?;
            println!("{} checks, {} violations; wrote {}", out.rows.len(), out.violations, cfg.out.display());
        }
        Command::Oracle(c) => {
            let cfg = resolve(&c, Mode::Oracle)?;
            let r = run_oracle(&cfg)?;
            if let Some(f) = &r.front {
                println!("exact {} monte-carlo {} sigma {} ({} samples)", f.exact, f.monte_carlo, f.sigma, f.samples);
            }
            for o in &r.optima {
                println!("n={} optimal {} exact-greedy {} subset {}", o.n, o.optimal, o.exact_greedy, o.subset.join("|"));
            }
        }
        Command::Hv { points, reference } => {
            let pts = points
                .iter()
                .map(|p| ObjectiveVector::new(parse_vector(p)?).map_err(|e| CliError::config("points", e)))
                .collect::<CliResult<Vec<_>>>()?;
            if pts.is_empty() {
                return Err(CliError::Config("points: give at least one point".into()));
            }
            let r = match reference {
                Some(s) => ReferencePoint::new(parse_vector(&s)?).map_err(|e| CliError::config("ref", e))?,
                None => ReferencePoint::origin(pts[0].dim()),
            };
            println!("{}", hypervolume(&pts, &r).map_err(|e| CliError::config("points", e))?);
        }
        Command::Sample { common, policy, n, samples } => {
            let cfg = resolve(&common, Mode::Subset)?;
            let (batch, value) = run_sample(&cfg, &policy, n, samples)?;
            println!("{value} {batch}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
