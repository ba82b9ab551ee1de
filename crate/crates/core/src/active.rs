//! Multi-round active learning.
//!
//! Each round fits a surrogate on the dataset (or uses the oracle itself
//! for deterministic runs), asks a [`BatchStrategy`] for a batch, drops
//! candidates that were already evaluated, queries the oracle and records
//! [`RoundMetrics`]. Every round draws from its own seeded stream, so a run
//! can be stopped after any round and resumed from its dataset.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::acquisition::{AcquisitionContext, AcquisitionMode, DEFAULT_FEATURE_BETA};
use crate::error::{contract, Result};
use crate::pareto::{hypervolume, pareto_indices, ObjectiveVector, ReferencePoint};
use crate::policy::{ConditionKind, Init, PolicyParams, PolicyShape, Scalarization};
use crate::rng::{derive_seed, stream, StdRng};
use crate::selection::{
    approx_greedy, exact_greedy, greedy_sample, train_greedy_policy, train_preference_policy,
    GreedyTrace, Maximizer, RlConfig, SubsetProblem, TieBreak, TrainConfig, TrainRecord,
};
use crate::surrogate::{fit_ensemble, DeterministicSurrogate, EnsembleConfig, EnsembleSurrogate, Surrogate};
use crate::tasks::{Candidate, Objective, SequenceSpace, DEFAULT_ENUMERATION_CAP};

/// One oracle evaluation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Record {
    /// 0 for the initial dataset.
    pub round: usize,
    pub candidate: Candidate,
    pub values: ObjectiveVector,
}

/// Evaluated candidates in query order. No candidate appears twice.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    records: Vec<Record>,
}

impl Dataset {
    /// Initial dataset (round 0); duplicates are rejected.
    pub fn new(initial: Vec<(Candidate, ObjectiveVector)>) -> Result<Self> {
        let mut d = Self::default();
        for (x, y) in initial {
            if d.contains(&x) {
                return Err(contract!("initial dataset contains a candidate twice"));
            }
            d.records.push(Record { round: 0, candidate: x, values: y });
        }
        Ok(d)
    }

    /// Rebuilds a dataset from saved records, checking uniqueness.
    pub fn from_records(records: Vec<Record>) -> Result<Self> {
        let mut d = Self::default();
        for r in records {
            if d.contains(&r.candidate) {
                return Err(contract!("dataset records contain a candidate twice"));
            }
            d.records.push(r);
        }
        Ok(d)
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, x: &Candidate) -> bool {
        self.records.iter().any(|r| &r.candidate == x)
    }

    pub fn candidates(&self) -> Vec<Candidate> {
        self.records.iter().map(|r| r.candidate.clone()).collect()
    }

    pub fn values(&self) -> Vec<ObjectiveVector> {
        self.records.iter().map(|r| r.values.clone()).collect()
    }

    pub fn pairs(&self) -> Vec<(Candidate, ObjectiveVector)> {
        self.records.iter().map(|r| (r.candidate.clone(), r.values.clone())).collect()
    }

    /// Queries made after initialization.
    pub fn queries(&self) -> usize {
        self.records.iter().filter(|r| r.round > 0).count()
    }

    /// Non-dominated records.
    pub fn pareto_front(&self) -> Result<Vec<Record>> {
        let idx = pareto_indices(&self.values())?;
        Ok(idx.into_iter().map(|i| self.records[i].clone()).collect())
    }

    pub fn hypervolume(&self, reference: &ReferencePoint) -> Result<f64> {
        hypervolume(&self.values(), reference)
    }
}

/// Metrics after a round (round 0 describes the initial dataset).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundMetrics {
    pub round: usize,
    /// Oracle queries after initialization.
    pub queries: usize,
    /// Oracle queries including the initial dataset.
    pub total_queries: usize,
    pub hypervolume: f64,
    pub proposed: usize,
    pub duplicates: usize,
}

/// Relative hypervolume series.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeHypervolume {
    pub values: Vec<f64>,
    /// Set when the baseline was zero and `values` are absolute.
    pub absolute: bool,
}

/// `HV_i / HV_baseline`, or the absolute series flagged when the baseline
/// hypervolume is zero.
pub fn relative_hypervolume(metrics: &[RoundMetrics], baseline_round: usize) -> Result<RelativeHypervolume> {
    let base = metrics
        .iter()
        .find(|m| m.round == baseline_round)
        .ok_or_else(|| contract!("no metrics for baseline round {baseline_round}"))?
        .hypervolume;
    if base > 0.0 {
        Ok(RelativeHypervolume { values: metrics.iter().map(|m| m.hypervolume / base).collect(), absolute: false })
    } else {
        Ok(RelativeHypervolume { values: metrics.iter().map(|m| m.hypervolume).collect(), absolute: true })
    }
}

/// Post-initialization query count at which the hypervolume first reaches
/// `target`.
pub fn queries_to_target(metrics: &[RoundMetrics], target: f64) -> Option<usize> {
    metrics.iter().find(|m| m.hypervolume >= target).map(|m| m.queries)
}

/// How the acquisition's surrogate is obtained each round.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "kind"))]
pub enum SurrogateSpec {
    /// The oracle itself (synthetic tasks).
    Deterministic,
    /// A bootstrap ensemble refit every round; its seed is replaced by one
    /// derived from the master seed and the round.
    Ensemble(EnsembleConfig),
}

/// Acquisition settings shared by every round.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AcquisitionSpec {
    pub beta: f64,
    pub feature_beta: f64,
    pub lambda: f64,
    pub mode: AcquisitionMode,
    /// Origin when empty.
    pub reference: Vec<f64>,
}

impl Default for AcquisitionSpec {
    fn default() -> Self {
        Self { beta: 0.1, feature_beta: DEFAULT_FEATURE_BETA, lambda: 0.0, mode: AcquisitionMode::Plain, reference: Vec::new() }
    }
}

impl AcquisitionSpec {
    pub fn reference_point(&self, m: usize) -> Result<ReferencePoint> {
        if self.reference.is_empty() {
            Ok(ReferencePoint::origin(m))
        } else if self.reference.len() != m {
            Err(contract!("reference point has {} entries, task has {m} objectives", self.reference.len()))
        } else {
            ReferencePoint::new(self.reference.clone())
        }
    }

    /// Context over `surrogate` whose archive holds the evaluated images and
    /// whose diversity term is measured against the evaluated candidates.
    pub fn context(&self, surrogate: Arc<dyn Surrogate>, dataset: &Dataset) -> Result<AcquisitionContext> {
        let reference = self.reference_point(surrogate.num_objectives())?;
        AcquisitionContext::new(surrogate, reference)?
            .with_beta(self.beta)?
            .with_feature_beta(self.feature_beta)?
            .with_diversity(self.mode, self.lambda, dataset.candidates())?
            .with_archive_images(dataset.values())
    }
}

/// Proposes a batch for one round.
pub trait BatchStrategy {
    fn name(&self) -> String;

    fn propose(
        &mut self,
        round: usize,
        ctx: &AcquisitionContext,
        space: &SequenceSpace,
        n: usize,
        rng: &mut StdRng,
    ) -> Result<Vec<Candidate>>;

    /// Candidates of the last proposal that were dropped as already evaluated.
    fn rejected(&mut self, _duplicates: &[Candidate]) {}
}

/// Settings of a freshly initialized policy network.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PolicyConfig {
    pub hidden: usize,
    /// Uniform `±init_scale` encoder weights; fan-in scaling when `None`.
    pub init_scale: Option<f64>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self { hidden: 32, init_scale: None }
    }
}

impl PolicyConfig {
    pub fn build(&self, space: &SequenceSpace, m: usize, kind: ConditionKind, rng: &mut StdRng) -> Result<PolicyParams> {
        let shape = PolicyShape { space: space.clone(), num_objectives: m, hidden: self.hidden, condition: kind };
        let init = match self.init_scale {
            Some(r) => Init::Uniform(r),
            None => Init::FanIn,
        };
        PolicyParams::new(shape, init, rng)
    }
}

/// The selection methods compared in experiments.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// Trained set-conditioned greedy policy; best evaluated subset.
    GreedyPolicy { train: TrainConfig, policy: PolicyConfig },
    ExactGreedy { cap: u128 },
    GreedyRandomSampling { budget: u64 },
    GreedyHillClimbing { budget: u64 },
    GreedyFreshPolicy { budget: u64, rl: RlConfig },
    PreferencePolicy { train: TrainConfig, policy: PolicyConfig, scalarization: Scalarization },
}

/// Output of one batch selection.
#[derive(Debug, Clone)]
pub struct Selection {
    pub batch: Vec<Candidate>,
    /// `a(batch)` under the selecting context.
    pub value: f64,
    pub trace: Option<GreedyTrace>,
    pub train_log: Vec<TrainRecord>,
    pub queries: u64,
    /// Trained policy, for the policy-based strategies.
    pub params: Option<PolicyParams>,
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::GreedyPolicy { .. } => "ours",
            Strategy::ExactGreedy { .. } => "exact-greedy",
            Strategy::GreedyRandomSampling { .. } => "greedy-rs",
            Strategy::GreedyHillClimbing { .. } => "greedy-hc",
            Strategy::GreedyFreshPolicy { .. } => "greedy-rl",
            Strategy::PreferencePolicy { scalarization: Scalarization::Weighted, .. } => "pc-rl-ws",
            Strategy::PreferencePolicy { scalarization: Scalarization::Chebyshev, .. } => "pc-rl-ts",
        }
    }

    /// Selects a batch of size at most `n`. Total budgets of the approximate
    /// greedy baselines are split evenly over the `n` steps.
    pub fn select(
        &self,
        ctx: &AcquisitionContext,
        space: &SequenceSpace,
        n: usize,
        rng: &mut StdRng,
        observer: &mut dyn FnMut(&TrainRecord),
    ) -> Result<Selection> {
        let problem = SubsetProblem::new(ctx.clone(), space.clone(), n)?;
        let m = ctx.num_objectives();
        let from_trace = |t: GreedyTrace| Selection {
            batch: t.subset.clone(),
            value: t.value,
            queries: t.queries(),
            trace: Some(t),
            train_log: Vec::new(),
            params: None,
        };
        let per_step = |budget: u64| (budget / n as u64).max(1);
        Ok(match self {
            Strategy::GreedyPolicy { train, policy } => {
                let cfg = TrainConfig { eval_cardinality: n, ..train.clone() };
                let theta = policy.build(space, m, ConditionKind::Set, rng)?;
                let out = train_greedy_policy(ctx, &cfg, theta, rng, observer)?;
                Selection {
                    batch: out.best_subset,
                    value: out.best_value,
                    trace: None,
                    queries: out.log.last().map_or(0, |r| r.queries),
                    train_log: out.log,
                    params: Some(out.params),
                }
            }
            Strategy::ExactGreedy { cap } => from_trace(exact_greedy(&problem, TieBreak::Lexicographic, *cap)?),
            Strategy::GreedyRandomSampling { budget } => {
                from_trace(approx_greedy(&problem, &Maximizer::RandomSampling, per_step(*budget), rng)?)
            }
            Strategy::GreedyHillClimbing { budget } => {
                from_trace(approx_greedy(&problem, &Maximizer::HillClimbing, per_step(*budget), rng)?)
            }
            Strategy::GreedyFreshPolicy { budget, rl } => {
                from_trace(approx_greedy(&problem, &Maximizer::Reinforce(rl.clone()), per_step(*budget), rng)?)
            }
            Strategy::PreferencePolicy { train, policy, scalarization } => {
                let cfg = TrainConfig { eval_cardinality: n, ..train.clone() };
                let theta = policy.build(space, m, ConditionKind::Preference, rng)?;
                let out = train_preference_policy(ctx, &cfg, *scalarization, theta, rng, observer)?;
                Selection {
                    batch: out.best_subset,
                    value: out.best_value,
                    trace: None,
                    queries: out.log.last().map_or(0, |r| r.queries),
                    train_log: out.log,
                    params: Some(out.params),
                }
            }
        })
    }
}

impl BatchStrategy for Strategy {
    fn name(&self) -> String {
        self.label().into()
    }

    fn propose(
        &mut self,
        _round: usize,
        ctx: &AcquisitionContext,
        space: &SequenceSpace,
        n: usize,
        rng: &mut StdRng,
    ) -> Result<Vec<Candidate>> {
        Ok(self.select(ctx, space, n, rng, &mut |_| {})?.batch)
    }
}

/// Re-exported so callers can build point-mass or scripted strategies on
/// top of the greedy-sampling engine.
pub use crate::selection::SetPolicy;

/// Greedy sampling from a fixed, already trained policy.
pub struct FixedPolicyStrategy<P> {
    pub policy: P,
    pub samples: usize,
}

impl<P: SetPolicy> BatchStrategy for FixedPolicyStrategy<P> {
    fn name(&self) -> String {
        "fixed-policy".into()
    }

    fn propose(
        &mut self,
        _round: usize,
        ctx: &AcquisitionContext,
        _space: &SequenceSpace,
        n: usize,
        rng: &mut StdRng,
    ) -> Result<Vec<Candidate>> {
        Ok(greedy_sample(ctx, &self.policy, n, self.samples, rng)?.subset)
    }
}

/// Settings of a multi-round run.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopConfig {
    pub rounds: usize,
    pub batch_size: usize,
    pub surrogate: SurrogateSpec,
    pub acquisition: AcquisitionSpec,
    pub seed: u64,
}

/// State of a multi-round run between rounds.
pub struct ActiveLearner {
    oracle: Arc<dyn Objective>,
    space: SequenceSpace,
    cfg: LoopConfig,
    dataset: Dataset,
    metrics: Vec<RoundMetrics>,
    last_ensemble: Option<Arc<EnsembleSurrogate>>,
}

impl ActiveLearner {
    /// Starts a run from an initial dataset; records round-0 metrics.
    pub fn new(oracle: Arc<dyn Objective>, space: SequenceSpace, cfg: LoopConfig, initial: Dataset) -> Result<Self> {
        if cfg.rounds == 0 || cfg.batch_size == 0 {
            return Err(contract!("active learning needs at least one round and a positive batch size"));
        }
        if matches!(cfg.surrogate, SurrogateSpec::Ensemble(_)) && initial.len() < 2 {
            return Err(contract!("an ensemble surrogate needs at least 2 initial points"));
        }
        if initial.records.iter().any(|r| r.round != 0) {
            return Err(contract!("initial dataset records must belong to round 0"));
        }
        let reference = cfg.acquisition.reference_point(oracle.num_objectives())?;
        let hv = initial.hypervolume(&reference)?;
        let metrics = alloc::vec![RoundMetrics {
            round: 0,
            queries: 0,
            total_queries: initial.len(),
            hypervolume: hv,
            proposed: 0,
            duplicates: 0,
        }];
        Ok(Self { oracle, space, cfg, dataset: initial, metrics, last_ensemble: None })
    }

    /// Continues a run from its saved dataset and metrics.
    pub fn resume(
        oracle: Arc<dyn Objective>,
        space: SequenceSpace,
        cfg: LoopConfig,
        dataset: Dataset,
        metrics: Vec<RoundMetrics>,
    ) -> Result<Self> {
        let last = metrics.last().ok_or_else(|| contract!("resuming needs at least the round-0 metrics"))?;
        if dataset.records.iter().any(|r| r.round > last.round) || last.total_queries != dataset.len() {
            return Err(contract!("dataset and metrics disagree about completed rounds"));
        }
        Ok(Self { oracle, space, cfg, dataset, metrics, last_ensemble: None })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn metrics(&self) -> &[RoundMetrics] {
        &self.metrics
    }

    /// Index of the next round to run (1-based).
    pub fn next_round(&self) -> usize {
        self.metrics.last().map_or(1, |m| m.round + 1)
    }

    pub fn finished(&self) -> bool {
        self.next_round() > self.cfg.rounds
    }

    /// Ensemble fitted in the most recent round, if any.
    pub fn last_ensemble(&self) -> Option<&Arc<EnsembleSurrogate>> {
        self.last_ensemble.as_ref()
    }

    fn surrogate(&mut self, round: usize) -> Result<Arc<dyn Surrogate>> {
        Ok(match &self.cfg.surrogate {
            SurrogateSpec::Deterministic => Arc::new(DeterministicSurrogate(self.oracle.clone())),
            SurrogateSpec::Ensemble(e) => {
                let cfg = EnsembleConfig { seed: derive_seed(self.cfg.seed, round as u64, "surrogate"), ..e.clone() };
                let fitted = Arc::new(fit_ensemble(&self.dataset.pairs(), self.space.vocab_size(), &cfg)?);
                self.last_ensemble = Some(fitted.clone());
                fitted
            }
        })
    }

    /// Runs the next round and returns its metrics.
    pub fn step(&mut self, strategy: &mut dyn BatchStrategy) -> Result<RoundMetrics> {
        let round = self.next_round();
        if round > self.cfg.rounds {
            return Err(contract!("all {} rounds already ran", self.cfg.rounds));
        }
        let surrogate = self.surrogate(round)?;
        let ctx = self.cfg.acquisition.context(surrogate, &self.dataset)?;
        let mut rng = stream(self.cfg.seed, round as u64, "round");
        let proposal = strategy.propose(round, &ctx, &self.space, self.cfg.batch_size, &mut rng)?;
        let mut fresh: Vec<Candidate> = Vec::with_capacity(proposal.len());
        let mut duplicates = Vec::new();
        for x in &proposal {
            if !self.space.contains(x) {
                return Err(contract!("strategy proposed a candidate outside the space"));
            }
            if self.dataset.contains(x) || fresh.contains(x) {
                duplicates.push(x.clone());
            } else {
                fresh.push(x.clone());
            }
        }
        if !duplicates.is_empty() {
            log::warn!("round {round}: skipped {} already-evaluated candidates", duplicates.len());
            strategy.rejected(&duplicates);
        }
        for x in fresh {
            let y = self.oracle.evaluate(&x)?;
            self.dataset.records.push(Record { round, candidate: x, values: y });
        }
        let reference = self.cfg.acquisition.reference_point(self.oracle.num_objectives())?;
        let m = RoundMetrics {
            round,
            queries: self.dataset.queries(),
            total_queries: self.dataset.len(),
            hypervolume: self.dataset.hypervolume(&reference)?,
            proposed: proposal.len(),
            duplicates: duplicates.len(),
        };
        self.metrics.push(m.clone());
        Ok(m)
    }
}

/// Runs every remaining round; returns the final dataset's non-dominated
/// records and all metrics.
pub fn run_active_learning(
    oracle: Arc<dyn Objective>,
    space: SequenceSpace,
    strategy: &mut dyn BatchStrategy,
    initial: Dataset,
    cfg: LoopConfig,
) -> Result<(Dataset, Vec<Record>, Vec<RoundMetrics>)> {
    let mut learner = ActiveLearner::new(oracle, space, cfg, initial)?;
    while !learner.finished() {
        learner.step(strategy)?;
    }
    let front = learner.dataset.pareto_front()?;
    Ok((learner.dataset, front, learner.metrics))
}

/// `count` distinct uniform candidates evaluated by the oracle.
pub fn random_initial_dataset(
    oracle: &dyn Objective,
    space: &SequenceSpace,
    count: usize,
    rng: &mut StdRng,
) -> Result<Dataset> {
    if (count as u128) > space.size() {
        return Err(contract!("cannot draw {count} distinct candidates from a space of {}", space.size()));
    }
    let mut xs: Vec<Candidate> = Vec::with_capacity(count);
    while xs.len() < count {
        let x = crate::selection::sample_uniform(space, rng);
        if !xs.contains(&x) {
            xs.push(x);
        }
    }
    let pairs = xs.into_iter().map(|x| Ok((x.clone(), oracle.evaluate(&x)?))).collect::<Result<Vec<_>>>()?;
    Dataset::new(pairs)
}

/// Exact greedy with the default enumeration cap.
pub fn exact_strategy() -> Strategy {
    Strategy::ExactGreedy { cap: DEFAULT_ENUMERATION_CAP }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pareto::optimal_subset_hypervolume;
    use crate::tasks::BigramTask;
    use alloc::vec;
    use rand::SeedableRng;

    fn tiny() -> (Arc<dyn Objective>, SequenceSpace) {
        let space = SequenceSpace::new("ABC", 2, 3).unwrap();
        let task = BigramTask::new(space.clone(), &["AB", "BC"]).unwrap();
        (Arc::new(task), space)
    }

    fn cfg(rounds: usize, n: usize, surrogate: SurrogateSpec) -> LoopConfig {
        LoopConfig { rounds, batch_size: n, surrogate, acquisition: AcquisitionSpec { beta: 0.0, ..Default::default() }, seed: 7 }
    }

    struct Empty;

    impl BatchStrategy for Empty {
        fn name(&self) -> String {
            "empty".into()
        }

        fn propose(&mut self, _: usize, _: &AcquisitionContext, _: &SequenceSpace, _: usize, _: &mut StdRng) -> Result<Vec<Candidate>> {
            Ok(Vec::new())
        }
    }

    /// Brute-force best `n`-subset against the archive, by enumeration.
    struct Exhaustive;

    impl BatchStrategy for Exhaustive {
        fn name(&self) -> String {
            "exhaustive".into()
        }

        fn propose(&mut self, _: usize, ctx: &AcquisitionContext, space: &SequenceSpace, n: usize, _: &mut StdRng) -> Result<Vec<Candidate>> {
            let xs = space.enumerate_all(1 << 20)?;
            let mut best = (f64::NEG_INFINITY, Vec::new());
            let mut combo: Vec<usize> = (0..n).collect();
            loop {
                let batch: Vec<Candidate> = combo.iter().map(|&i| xs[i].clone()).collect();
                let v = ctx.value(&batch)?;
                if v > best.0 {
                    best = (v, batch);
                }
                if !crate::pareto::next_combination(&mut combo, xs.len()) {
                    break;
                }
            }
            Ok(best.1)
        }
    }

    #[test]
    fn single_round_exhaustive_reaches_optimal_subset() {
        let (oracle, space) = tiny();
        let n = 3;
        let (data, _, metrics) =
            run_active_learning(oracle.clone(), space.clone(), &mut Exhaustive, Dataset::default(), cfg(1, n, SurrogateSpec::Deterministic))
                .unwrap();
        let images: Vec<ObjectiveVector> =
            space.enumerate_all(1000).unwrap().iter().map(|x| oracle.evaluate(x).unwrap()).collect();
        let (opt, _) = optimal_subset_hypervolume(&images, &ReferencePoint::origin(2), n, 1 << 30).unwrap();
        assert_eq!(metrics[1].hypervolume, opt);
        assert_eq!(data.queries(), n);
    }

    #[test]
    fn empty_batches_leave_everything_flat() {
        let (oracle, space) = tiny();
        let x = space.parse("ABC").unwrap();
        let init = Dataset::new(vec![(x.clone(), oracle.evaluate(&x).unwrap())]).unwrap();
        let (data, _, metrics) =
            run_active_learning(oracle, space, &mut Empty, init.clone(), cfg(3, 2, SurrogateSpec::Deterministic)).unwrap();
        assert_eq!(data, init);
        assert!(metrics.windows(2).all(|w| w[0].hypervolume == w[1].hypervolume && w[0].queries == w[1].queries));
        let rel = relative_hypervolume(&metrics, 0).unwrap();
        assert!(!rel.absolute && rel.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn covering_the_space_reaches_the_full_front() {
        let (oracle, space) = tiny();
        let size = space.size() as usize;
        let rounds = size.div_ceil(4) + 2;
        let mut s = exact_strategy();
        let (data, front, metrics) =
            run_active_learning(oracle.clone(), space.clone(), &mut s, Dataset::default(), cfg(rounds, 4, SurrogateSpec::Deterministic))
                .unwrap();
        let all: Vec<ObjectiveVector> =
            space.enumerate_all(1000).unwrap().iter().map(|x| oracle.evaluate(x).unwrap()).collect();
        let full = hypervolume(&all, &ReferencePoint::origin(2)).unwrap();
        assert_eq!(metrics.last().unwrap().hypervolume, full);
        assert!(data.len() <= size);
        assert!(!front.is_empty());
        for w in metrics.windows(2) {
            assert!(w[1].hypervolume >= w[0].hypervolume);
        }
    }

    #[test]
    fn relative_hv_examples() {
        let mk = |round, hv| RoundMetrics { round, queries: round * 2, total_queries: round * 2, hypervolume: hv, proposed: 2, duplicates: 0 };
        let ms = vec![mk(0, 0.25), mk(1, 0.5), mk(2, 0.5)];
        let rel = relative_hypervolume(&ms, 0).unwrap();
        assert_eq!(rel.values, vec![1.0, 2.0, 2.0]);
        let zero = vec![mk(0, 0.0), mk(1, 0.5)];
        let rel = relative_hypervolume(&zero, 0).unwrap();
        assert!(rel.absolute);
        assert_eq!(rel.values, vec![0.0, 0.5]);
        assert_eq!(queries_to_target(&ms, 0.5), Some(2));
        assert_eq!(queries_to_target(&ms, 0.9), None);
    }

    struct Repeat(Vec<Candidate>);

    impl BatchStrategy for Repeat {
        fn name(&self) -> String {
            "repeat".into()
        }

        fn propose(&mut self, _: usize, _: &AcquisitionContext, _: &SequenceSpace, _: usize, _: &mut StdRng) -> Result<Vec<Candidate>> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn duplicates_are_never_requeried() {
        let (oracle, space) = tiny();
        let x = space.parse("ABC").unwrap();
        let mut s = Repeat(vec![x.clone(), x.clone()]);
        let (data, _, metrics) =
            run_active_learning(oracle, space, &mut s, Dataset::default(), cfg(3, 2, SurrogateSpec::Deterministic)).unwrap();
        assert_eq!(data.len(), 1);
        assert_eq!(metrics[1].duplicates, 1);
        assert_eq!(metrics[2].duplicates, 2);
    }

    #[test]
    fn resumed_run_matches_uninterrupted_run() {
        let (oracle, space) = tiny();
        let ens = SurrogateSpec::Ensemble(EnsembleConfig { epochs: 30, hidden: 8, ..Default::default() });
        let init = random_initial_dataset(oracle.as_ref(), &space, 5, &mut StdRng::seed_from_u64(3)).unwrap();
        let c = LoopConfig { acquisition: AcquisitionSpec::default(), ..cfg(3, 2, ens) };
        let mut s = Strategy::GreedyRandomSampling { budget: 20 };
        let (full, _, full_metrics) = run_active_learning(oracle.clone(), space.clone(), &mut s, init.clone(), c.clone()).unwrap();

        let mut first = ActiveLearner::new(oracle.clone(), space.clone(), c.clone(), init).unwrap();
        first.step(&mut s).unwrap();
        let mut resumed =
            ActiveLearner::resume(oracle, space, c, first.dataset().clone(), first.metrics().to_vec()).unwrap();
        assert_eq!(resumed.next_round(), 2);
        while !resumed.finished() {
            resumed.step(&mut s).unwrap();
        }
        assert_eq!(resumed.dataset(), &full);
        assert_eq!(resumed.metrics(), &full_metrics[..]);
    }
}
