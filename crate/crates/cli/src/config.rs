//! Run configuration: one TOML file with nested sections.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use setgreedy_core::active::{AcquisitionSpec, PolicyConfig, Strategy, SurrogateSpec};
use setgreedy_core::policy::Scalarization;
use setgreedy_core::selection::{RlConfig, TrainConfig};
use setgreedy_core::tasks::DEFAULT_ENUMERATION_CAP;
use setgreedy_core::{BigramTask, SequenceSpace};

use crate::error::CliError;

/// Environment variable overriding the output directory.
pub const ENV_OUT: &str = "SETGREEDY_OUT";
/// Environment variable overriding the worker thread count.
pub const ENV_THREADS: &str = "SETGREEDY_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Subset,
    Al,
    Verify,
    Oracle,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Subset => "subset",
            Mode::Al => "al",
            Mode::Verify => "verify",
            Mode::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Ours,
    ExactGreedy,
    GreedyRs,
    GreedyHc,
    GreedyRl,
    PcRlWs,
    PcRlTs,
}

impl StrategyKind {
    pub fn label(self) -> &'static str {
        match self {
            StrategyKind::Ours => "ours",
            StrategyKind::ExactGreedy => "exact-greedy",
            StrategyKind::GreedyRs => "greedy-rs",
            StrategyKind::GreedyHc => "greedy-hc",
            StrategyKind::GreedyRl => "greedy-rl",
            StrategyKind::PcRlWs => "pc-rl-ws",
            StrategyKind::PcRlTs => "pc-rl-ts",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub vocab: String,
    pub min_len: usize,
    pub max_len: usize,
    pub targets: Vec<String>,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self { vocab: "ACVW".into(), min_len: 6, max_len: 8, targets: vec!["AV".into(), "VC".into()] }
    }
}

impl TaskConfig {
    pub fn build(&self) -> Result<BigramTask, CliError> {
        let space = SequenceSpace::new(&self.vocab, self.min_len, self.max_len).map_err(|e| CliError::config("task", e))?;
        let targets: Vec<&str> = self.targets.iter().map(String::as_str).collect();
        BigramTask::new(space, &targets).map_err(|e| CliError::config("task.targets", e))
    }
}

/// Settings of the non-learned baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Total surrogate queries per selection; defaults to the trained
    /// policy's budget for the same cardinality.
    pub budget: Option<u64>,
    pub exact_cap: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { budget: None, exact_cap: DEFAULT_ENUMERATION_CAP as u64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlConfig {
    pub rounds: usize,
    pub batch_size: usize,
    pub initial: usize,
    /// Fractions of the best median final hypervolume used as targets.
    pub target_fractions: Vec<f64>,
}

impl Default for AlConfig {
    fn default() -> Self {
        Self { rounds: 5, batch_size: 4, initial: 8, target_fractions: vec![0.5, 0.8, 0.9, 1.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    ApproxGreedy,
    NonOblivious,
}

impl BoundKind {
    pub fn label(self) -> &'static str {
        match self {
            BoundKind::ApproxGreedy => "approx-greedy",
            BoundKind::NonOblivious => "non-oblivious",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub instances: usize,
    pub bounds: Vec<BoundKind>,
    /// Test hook: multiplies the measured submodularity ratio.
    pub gamma_scale: f64,
    /// Test hook: replaces the measured approximation ratio.
    pub alpha_override: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { instances: 100, bounds: vec![BoundKind::ApproxGreedy, BoundKind::NonOblivious], gamma_scale: 1.0, alpha_override: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Objective vectors to measure; the task's optimum is searched when
    /// `subset_sizes` is non-empty.
    pub front: Vec<Vec<f64>>,
    pub mc_samples: u64,
    pub subset_sizes: Vec<usize>,
    pub cap: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { front: Vec::new(), mc_samples: 1_000_000, subset_sizes: Vec::new(), cap: 50_000_000 }
    }
}

/// Everything a run needs. Serialized back with every run after defaults
/// and overrides are applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub seed: u64,
    pub trials: usize,
    pub threads: usize,
    pub out: PathBuf,
    pub cardinalities: Vec<usize>,
    pub strategies: Vec<StrategyKind>,
    pub task: TaskConfig,
    pub baseline: BaselineConfig,
    pub train: TrainConfig,
    pub policy: PolicyConfig,
    pub rl: RlConfig,
    pub surrogate: SurrogateSpec,
    pub acquisition: AcquisitionSpec,
    pub al: AlConfig,
    pub verify: VerifyConfig,
    pub oracle: OracleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: None,
            seed: 0,
            trials: 1,
            threads: 1,
            out: PathBuf::from("runs/latest"),
            cardinalities: vec![4],
            strategies: vec![StrategyKind::Ours],
            task: TaskConfig::default(),
            baseline: BaselineConfig::default(),
            train: TrainConfig::default(),
            policy: PolicyConfig::default(),
            rl: RlConfig::default(),
            surrogate: SurrogateSpec::Deterministic,
            acquisition: AcquisitionSpec::default(),
            al: AlConfig::default(),
            verify: VerifyConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file and environment.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {}", e.message().trim()).replace('\n', " ") + &span_key(text, e.span())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Fixes the mode, then applies environment and command-line overrides
    /// (command line wins) and validates.
    pub fn resolve(
        mut self,
        mode: Mode,
        overrides: &Overrides,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<Self, CliError> {
        match self.mode {
            Some(m) if m != mode => {
                return Err(CliError::Config(format!(
                    "mode: config is for `{}` but the `{}` command was run",
                    m.as_str(),
                    mode.as_str()
                )))
            }
            _ => self.mode = Some(mode),
        }
        if let Some(out) = env(ENV_OUT) {
            self.out = PathBuf::from(out);
        }
        if let Some(t) = env(ENV_THREADS) {
            self.threads =
                t.parse().map_err(|_| CliError::Config(format!("threads: {ENV_THREADS}={t:?} is not a count")))?;
        }
        if let Some(s) = overrides.seed {
            self.seed = s;
        }
        if let Some(t) = overrides.trials {
            self.trials = t;
        }
        if let Some(o) = &overrides.out {
            self.out = o.clone();
        }
        if let Some(t) = overrides.threads {
            self.threads = t;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, msg: &str| Err(CliError::Config(format!("{key}: {msg}")));
        if self.trials == 0 {
            return bad("trials", "must be positive");
        }
        if self.threads == 0 {
            return bad("threads", "must be positive");
        }
        self.task.build()?;
        match self.mode {
            Some(Mode::Subset) | Some(Mode::Al) => {
                if self.strategies.is_empty() {
                    return bad("strategies", "list at least one strategy");
                }
                let mut seen = self.strategies.clone();
                seen.sort();
                seen.dedup();
                if seen.len() != self.strategies.len() {
                    return bad("strategies", "lists a strategy twice");
                }
                self.train.validate().map_err(|e| CliError::config("train", e))?;
                if self.policy.hidden == 0 {
                    return bad("policy.hidden", "must be positive");
                }
                if let Some(r) = self.policy.init_scale {
                    if !(r > 0.0 && r.is_finite()) {
                        return bad("policy.init_scale", "must be positive");
                    }
                }
                if self.baseline.budget == Some(0) {
                    return bad("baseline.budget", "must be positive");
                }
                if !(self.acquisition.beta >= 0.0 && self.acquisition.beta.is_finite()) {
                    return bad("acquisition.beta", "must be non-negative");
                }
                if !(self.acquisition.lambda >= 0.0 && self.acquisition.lambda.is_finite()) {
                    return bad("acquisition.lambda", "must be non-negative");
                }
                let m = self.task.targets.len();
                if !self.acquisition.reference.is_empty() && self.acquisition.reference.len() != m {
                    return bad("acquisition.reference", "needs one entry per target bigram");
                }
            }
            _ => {}
        }
        match self.mode {
            Some(Mode::Subset) => {
                if self.cardinalities.is_empty() || self.cardinalities.contains(&0) {
                    return bad("cardinalities", "list positive batch sizes");
                }
            }
            Some(Mode::Al) => {
                if self.al.rounds == 0 {
                    return bad("al.rounds", "must be positive");
                }
                if self.al.batch_size == 0 {
                    return bad("al.batch_size", "must be positive");
                }
                if matches!(self.surrogate, SurrogateSpec::Ensemble(_)) && self.al.initial < 2 {
                    return bad("al.initial", "an ensemble surrogate needs at least 2 initial points");
                }
                if self.al.target_fractions.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
                    return bad("al.target_fractions", "must be positive");
                }
            }
            Some(Mode::Verify) => {
                if self.verify.instances == 0 {
                    return bad("verify.instances", "must be positive");
                }
                if self.verify.bounds.is_empty() {
                    return bad("verify.bounds", "list at least one bound");
                }
                if !(self.verify.gamma_scale > 0.0 && self.verify.gamma_scale.is_finite()) {
                    return bad("verify.gamma_scale", "must be positive");
                }
            }
            Some(Mode::Oracle) => {
                if self.oracle.front.is_empty() && self.oracle.subset_sizes.is_empty() {
                    return bad("oracle", "give a front, subset sizes, or both");
                }
                if self.oracle.mc_samples == 0 {
                    return bad("oracle.mc_samples", "must be positive");
                }
                if self.oracle.subset_sizes.contains(&0) {
                    return bad("oracle.subset_sizes", "must be positive");
                }
            }
            None => {}
        }
        Ok(())
    }

    /// Total surrogate queries granted to the approximate greedy baselines
    /// at cardinality `n`.
    pub fn baseline_budget(&self, n: usize) -> u64 {
        self.baseline.budget.unwrap_or_else(|| TrainConfig { eval_cardinality: n, ..self.train.clone() }.query_budget())
    }

    pub fn strategy(&self, kind: StrategyKind, n: usize) -> Strategy {
        let budget = self.baseline_budget(n);
        match kind {
            StrategyKind::Ours => Strategy::GreedyPolicy { train: self.train.clone(), policy: self.policy.clone() },
            StrategyKind::ExactGreedy => Strategy::ExactGreedy { cap: u128::from(self.baseline.exact_cap) },
            StrategyKind::GreedyRs => Strategy::GreedyRandomSampling { budget },
            StrategyKind::GreedyHc => Strategy::GreedyHillClimbing { budget },
            StrategyKind::GreedyRl => Strategy::GreedyFreshPolicy { budget, rl: self.rl.clone() },
            StrategyKind::PcRlWs | StrategyKind::PcRlTs => Strategy::PreferencePolicy {
                train: self.train.clone(),
                policy: self.policy.clone(),
                scalarization: if kind == StrategyKind::PcRlWs { Scalarization::Weighted } else { Scalarization::Chebyshev },
            },
        }
    }
}

/// ` (at `key`)` for the dotted key at a parse error's position, when known.
fn span_key(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    let Some(span) = span else { return String::new() };
    let mut section = String::new();
    let mut line_key = String::new();
    let mut offset = 0;
    for line in text.lines() {
        let end = offset + line.len() + 1;
        let t = line.trim();
        if t.starts_with('[') {
            section = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
        }
        if span.start < end {
            if let Some((k, _)) = t.split_once('=') {
                line_key = k.trim().to_string();
            }
            break;
        }
        offset = end;
    }
    match (section.is_empty(), line_key.is_empty()) {
        (_, true) if section.is_empty() => String::new(),
        (_, true) => format!(" (in [{section}])"),
        (true, false) => format!(" (at `{line_key}`)"),
        (false, false) => format!(" (at `{section}.{line_key}`)"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn none(_: &str) -> Option<String> {
        None
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default().resolve(Mode::Subset, &Overrides::default(), none).unwrap();
        let back = RunConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_and_invalid_keys_are_named() {
        let e = RunConfig::parse("[train]\nlearning_rat = 0.1\n").unwrap_err().to_string();
        assert!(e.contains("learning_rat"), "{e}");
        let e = RunConfig::parse("seed = 1\n[train]\nupdates = \"many\"\n").unwrap_err().to_string();
        assert!(e.contains("train.updates"), "{e}");
        let c = RunConfig::parse("[al]\nrounds = 0\n").unwrap();
        let e = c.resolve(Mode::Al, &Overrides::default(), none).unwrap_err().to_string();
        assert!(e.contains("al.rounds"), "{e}");
        let c = RunConfig::parse("[train]\nepisodes = 0\n").unwrap();
        let e = c.resolve(Mode::Subset, &Overrides::default(), none).unwrap_err().to_string();
        assert!(e.contains("episodes"), "{e}");
    }

    #[test]
    fn mode_mismatch_is_a_config_error() {
        let c = RunConfig::parse("mode = \"al\"\n").unwrap();
        assert!(matches!(c.resolve(Mode::Subset, &Overrides::default(), none), Err(CliError::Config(_))));
    }

    #[test]
    fn override_precedence() {
        let c = RunConfig::parse("out = \"file\"\nthreads = 2\n").unwrap();
        let env = |k: &str| match k {
            ENV_OUT => Some("env".to_string()),
            ENV_THREADS => Some("3".to_string()),
            "SETGREEDY_SEED" => Some("99".to_string()),
            _ => None,
        };
        let r = c.clone().resolve(Mode::Verify, &Overrides::default(), env).unwrap();
        assert_eq!((r.out.to_str().unwrap(), r.threads, r.seed), ("env", 3, 0));
        let flags = Overrides { out: Some("flag".into()), threads: Some(4), seed: Some(5), trials: Some(6) };
        let r = c.resolve(Mode::Verify, &flags, env).unwrap();
        assert_eq!((r.out.to_str().unwrap(), r.threads, r.seed, r.trials), ("flag", 4, 5, 6));
    }

    #[test]
    fn ensemble_surrogate_section_parses() {
        let c = RunConfig::parse("[surrogate]\nkind = \"ensemble\"\nmembers = 3\nepochs = 10\n").unwrap();
        match c.surrogate {
            SurrogateSpec::Ensemble(e) => assert_eq!((e.members, e.epochs), (3, 10)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn baseline_budget_matches_policy_budget() {
        let c = RunConfig::default();
        let t = TrainConfig { eval_cardinality: 3, ..c.train.clone() };
        assert_eq!(c.baseline_budget(3), t.query_budget());
        let c = RunConfig { baseline: BaselineConfig { budget: Some(77), ..Default::default() }, ..c };
        assert_eq!(c.baseline_budget(3), 77);
    }
}
