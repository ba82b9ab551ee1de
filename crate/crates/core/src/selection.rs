//! Subset-selection engines for `max_{|B| ≤ n} a(B)`.
//!
//! * [`exact_greedy`]: argmax of the marginal gain over the whole
//!   (enumerable) space at every step.
//! * [`approx_greedy`]: the same loop with an inner maximizer working from a
//!   per-step query budget (random sampling, hill climbing, or a fresh
//!   REINFORCE policy).
//! * [`greedy_sample`]: `GS(a, π, k, l)`, best-of-`l` sampling from a
//!   set-conditioned policy for `k` steps.
//! * [`train_greedy_policy`]: amortized training of the set-conditioned
//!   policy on its own greedy-sampling distribution, with a behavior policy
//!   refreshed every `N_t` updates.
//! * [`train_preference_policy`] and [`pc_rl_batch`]: the
//!   preference-conditioned baseline.
//!
//! Query counts refer to acquisition-image evaluations of candidates.

use alloc::vec::Vec;

use rand::Rng;

use crate::acquisition::{AcquisitionContext, GreedyState};
use crate::error::{contract, Error, Result};
use crate::pareto::ObjectiveVector;
use crate::policy::{
    scalarize, Condition, ConditionKind, GradientAccumulator, Init, PolicyParams, PolicyShape, PreferenceCondition,
    Scalarization, SetCondition, Trajectory,
};
use crate::rng::StdRng;
use crate::tasks::{Candidate, SequenceSpace};

/// `max a(B)` subject to `|B| ≤ n` over a sequence space.
#[derive(Debug, Clone)]
pub struct SubsetProblem {
    pub acquisition: AcquisitionContext,
    pub space: SequenceSpace,
    pub n: usize,
}

impl SubsetProblem {
    pub fn new(acquisition: AcquisitionContext, space: SequenceSpace, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(contract!("cardinality must be at least 1"));
        }
        Ok(Self { acquisition, space, n })
    }
}

/// One step of a greedy construction.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GreedyStep {
    /// `None` when the step stalled (every proposal was already a member).
    pub candidate: Option<Candidate>,
    /// Achieved marginal gain `Δ_a(x_i | B_i)`.
    pub gain: f64,
    /// Exact step maximum `max_x Δ_a(x | B_i)` when known.
    pub best_gain: Option<f64>,
    /// Number of exact maximizers when known.
    pub ties: Option<usize>,
    /// Subset size after the step.
    pub size: usize,
    pub queries: u64,
}

impl GreedyStep {
    pub fn stalled(&self) -> bool {
        self.candidate.is_none()
    }

    /// `Δ_i / Δ*_i` with `0/0 := 1`.
    pub fn alpha(&self) -> Option<f64> {
        self.best_gain.map(|best| ratio(self.gain, best))
    }
}

pub(crate) fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Full record of a greedy run.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GreedyTrace {
    pub steps: Vec<GreedyStep>,
    /// Final subset in insertion order.
    pub subset: Vec<Candidate>,
    /// `a(subset)`, accumulated from marginal gains.
    pub value: f64,
}

impl GreedyTrace {
    /// Minimum per-step `Δ_i / Δ*_i`, if every step carries its exact maximum.
    pub fn alpha(&self) -> Option<f64> {
        let mut alpha: f64 = 1.0;
        for s in &self.steps {
            alpha = alpha.min(s.alpha()?);
        }
        Some(alpha)
    }

    pub fn queries(&self) -> u64 {
        self.steps.iter().map(|s| s.queries).sum()
    }

    pub fn stalls(&self) -> usize {
        self.steps.iter().filter(|s| s.stalled()).count()
    }
}

/// Tie-breaking rule for [`exact_greedy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Smallest candidate in lexicographic order.
    #[default]
    Lexicographic,
    /// Uniformly among maximizers, from a seeded stream.
    Uniform(u64),
}

/// Exact greedy over the enumerated space.
pub fn exact_greedy(problem: &SubsetProblem, ties: TieBreak, cap: u128) -> Result<GreedyTrace> {
    let ctx = &problem.acquisition;
    let ground = problem.space.enumerate_all(cap)?;
    let images = ground.iter().map(|x| ctx.image(x)).collect::<Result<Vec<_>>>()?;
    let mut rng = match ties {
        TieBreak::Uniform(seed) => Some(<StdRng as rand::SeedableRng>::seed_from_u64(seed)),
        TieBreak::Lexicographic => None,
    };
    let mut state = ctx.start(&[])?;
    let mut taken = alloc::vec![false; ground.len()];
    let mut trace = GreedyTrace::default();
    let mut gains = alloc::vec![0.0; ground.len()];
    for _ in 0..problem.n {
        let mut best = f64::NEG_INFINITY;
        let mut remaining = 0usize;
        for (i, x) in ground.iter().enumerate() {
            if taken[i] {
                continue;
            }
            remaining += 1;
            gains[i] = state.gain(x, &images[i]);
            best = best.max(gains[i]);
        }
        if remaining == 0 {
            break;
        }
        let maximizers: Vec<usize> = (0..ground.len()).filter(|&i| !taken[i] && gains[i] == best).collect();
        let pick = match rng.as_mut() {
            Some(r) => maximizers[r.random_range(0..maximizers.len())],
            None => maximizers[0],
        };
        taken[pick] = true;
        let gain = state.push(ground[pick].clone(), &images[pick]);
        trace.steps.push(GreedyStep {
            candidate: Some(ground[pick].clone()),
            gain,
            best_gain: Some(best),
            ties: Some(maximizers.len()),
            size: state.members().len(),
            queries: remaining as u64,
        });
    }
    trace.value = state.value();
    trace.subset = state.into_members();
    Ok(trace)
}

/// Uniform draw from the space: length with probability proportional to the
/// number of sequences of that length, then uniform tokens.
pub fn sample_uniform<R: Rng + ?Sized>(space: &SequenceSpace, rng: &mut R) -> Candidate {
    let v = space.vocab_size() as f64;
    let lens: Vec<usize> = (space.min_len()..=space.max_len()).collect();
    // Weights relative to the longest layer keep the numbers in range.
    let weights: Vec<f64> = lens.iter().map(|&l| libm::pow(v, l as f64 - space.max_len() as f64)).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut len = space.max_len();
    for (&l, &w) in lens.iter().zip(&weights) {
        if u < w {
            len = l;
            break;
        }
        u -= w;
    }
    Candidate((0..len).map(|_| rng.random_range(0..space.vocab_size()) as u8).collect())
}

/// Configuration of the fresh-policy inner maximizer.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RlConfig {
    pub episodes: usize,
    pub hidden: usize,
    pub learning_rate: f64,
    pub p_rand: f64,
    pub eps_norm: f64,
    /// Samples drawn from the trained policy at the end of each step.
    pub samples: usize,
    pub init_scale: f64,
}

impl Default for RlConfig {
    fn default() -> Self {
        Self {
            episodes: 128,
            hidden: 32,
            learning_rate: 1e-3,
            p_rand: 0.05,
            eps_norm: 1e-8,
            samples: 16,
            init_scale: 1e-2,
        }
    }
}

/// Inner maximizer for [`approx_greedy`].
#[derive(Debug, Clone, PartialEq)]
pub enum Maximizer {
    /// Best of `budget` uniform samples (with replacement).
    RandomSampling,
    /// Steepest ascent over substitution neighbors with random restarts.
    HillClimbing,
    /// REINFORCE on a fresh policy, then best of its samples.
    Reinforce(RlConfig),
}

/// Approximated greedy with a per-step query budget.
pub fn approx_greedy<R: Rng + ?Sized>(
    problem: &SubsetProblem,
    maximizer: &Maximizer,
    budget_per_step: u64,
    rng: &mut R,
) -> Result<GreedyTrace> {
    if budget_per_step == 0 {
        return Err(contract!("per-step budget must be at least 1"));
    }
    let ctx = &problem.acquisition;
    let mut state = ctx.start(&[])?;
    let mut trace = GreedyTrace::default();
    for _ in 0..problem.n {
        let (found, queries) = match maximizer {
            Maximizer::RandomSampling => random_sampling(ctx, &problem.space, &mut state, budget_per_step, rng)?,
            Maximizer::HillClimbing => hill_climbing(ctx, &problem.space, &mut state, budget_per_step, rng)?,
            Maximizer::Reinforce(cfg) => fresh_policy(ctx, &problem.space, &mut state, budget_per_step, cfg, rng)?,
        };
        record(&mut trace, &mut state, found, queries);
    }
    trace.value = state.value();
    trace.subset = state.into_members();
    Ok(trace)
}

fn record(trace: &mut GreedyTrace, state: &mut GreedyState<'_>, found: Option<Scored>, queries: u64) {
    let step = match found {
        Some(s) => {
            let gain = state.push(s.candidate.clone(), &s.image);
            GreedyStep {
                candidate: Some(s.candidate),
                gain,
                best_gain: None,
                ties: None,
                size: state.members().len(),
                queries,
            }
        }
        None => GreedyStep {
            candidate: None,
            gain: 0.0,
            best_gain: None,
            ties: None,
            size: state.members().len(),
            queries,
        },
    };
    trace.steps.push(step);
}

struct Scored {
    candidate: Candidate,
    image: ObjectiveVector,
    gain: f64,
}

/// Keeps the first strictly better non-member.
fn offer(best: &mut Option<Scored>, state: &mut GreedyState<'_>, x: Candidate, image: ObjectiveVector) -> f64 {
    if state.contains(&x) {
        return 0.0;
    }
    let gain = state.gain(&x, &image);
    if best.as_ref().is_none_or(|b| gain > b.gain) {
        *best = Some(Scored { candidate: x, image, gain });
    }
    gain
}

fn random_sampling<R: Rng + ?Sized>(
    ctx: &AcquisitionContext,
    space: &SequenceSpace,
    state: &mut GreedyState<'_>,
    budget: u64,
    rng: &mut R,
) -> Result<(Option<Scored>, u64)> {
    let mut best = None;
    for _ in 0..budget {
        let x = sample_uniform(space, rng);
        let img = ctx.image(&x)?;
        offer(&mut best, state, x, img);
    }
    Ok((best, budget))
}

fn hill_climbing<R: Rng + ?Sized>(
    ctx: &AcquisitionContext,
    space: &SequenceSpace,
    state: &mut GreedyState<'_>,
    budget: u64,
    rng: &mut R,
) -> Result<(Option<Scored>, u64)> {
    let v = space.vocab_size() as u8;
    let mut best = None;
    let mut used = 0u64;
    'restart: while used < budget {
        let mut current = sample_uniform(space, rng);
        let img = ctx.image(&current)?;
        used += 1;
        let mut current_gain = if state.contains(&current) { 0.0 } else { state.gain(&current, &img) };
        offer(&mut best, state, current.clone(), img);
        loop {
            let mut step: Option<(Candidate, f64)> = None;
            for pos in 0..current.len() {
                for t in 0..v {
                    if t == current.0[pos] {
                        continue;
                    }
                    if used >= budget {
                        break 'restart;
                    }
                    let mut y = current.clone();
                    y.0[pos] = t;
                    let img = ctx.image(&y)?;
                    used += 1;
                    let g = offer(&mut best, state, y.clone(), img);
                    if step.as_ref().is_none_or(|(_, sg)| g > *sg) {
                        step = Some((y, g));
                    }
                }
            }
            match step {
                Some((y, g)) if g > current_gain => {
                    current = y;
                    current_gain = g;
                }
                _ => continue 'restart,
            }
        }
    }
    Ok((best, used))
}

fn fresh_policy<R: Rng + ?Sized>(
    ctx: &AcquisitionContext,
    space: &SequenceSpace,
    state: &mut GreedyState<'_>,
    budget: u64,
    cfg: &RlConfig,
    rng: &mut R,
) -> Result<(Option<Scored>, u64)> {
    if cfg.episodes == 0 || cfg.samples == 0 {
        return Err(contract!("fresh-policy maximizer needs positive episodes and samples"));
    }
    let shape = PolicyShape {
        space: space.clone(),
        num_objectives: ctx.num_objectives(),
        hidden: cfg.hidden,
        condition: ConditionKind::Set,
    };
    let mut theta = PolicyParams::new(shape, Init::Uniform(cfg.init_scale), rng)?;
    let cond = theta.encode(&Condition::Set(SetCondition::default()))?;
    let samples = (cfg.samples as u64).min(budget);
    let updates = (budget - samples) / cfg.episodes as u64;
    let mut used = 0u64;
    for u in 0..updates {
        let mut episodes = Vec::with_capacity(cfg.episodes);
        for _ in 0..cfg.episodes {
            let t = theta.sample_trajectory(&cond, cfg.p_rand, rng);
            let img = ctx.image(&t.candidate)?;
            let r = state.gain(&t.candidate, &img);
            episodes.push((t, r));
        }
        used += cfg.episodes as u64;
        let dir = reinforce_direction(&theta, &cond, &episodes, cfg.eps_norm)?;
        if let Some(dir) = dir {
            theta.ascend(&dir, cfg.learning_rate);
            if !theta.is_finite() {
                return Err(Error::NonFinite { update: u as usize, what: "fresh-policy parameters".into() });
            }
        }
    }
    let mut best = None;
    for _ in 0..samples {
        let t = theta.sample_trajectory(&cond, 0.0, rng);
        let img = ctx.image(&t.candidate)?;
        offer(&mut best, state, t.candidate, img);
    }
    Ok((best, used + samples))
}

/// Mean-baseline normalized returns `r̂_j = (r_j − mean)/(std + ε)`; `None`
/// when all returns are equal.
pub fn normalize_returns(returns: &[f64], eps: f64) -> Option<Vec<f64>> {
    let first = *returns.first()?;
    if returns.iter().all(|&r| r == first) {
        return None;
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let sd = libm::sqrt(var);
    Some(returns.iter().map(|r| (r - mean) / (sd + eps)).collect())
}

/// `Σ_j r̂_j ∇θ log π_θ(x_j | c)` for episodes sharing one condition, or
/// `None` when the normalized returns vanish.
fn reinforce_direction(
    theta: &PolicyParams,
    cond: &crate::policy::EncodedCondition,
    episodes: &[(Trajectory, f64)],
    eps: f64,
) -> Result<Option<Vec<f64>>> {
    let returns: Vec<f64> = episodes.iter().map(|(_, r)| *r).collect();
    let Some(weights) = normalize_returns(&returns, eps) else {
        return Ok(None);
    };
    let mut acc = GradientAccumulator::new(theta, cond);
    for ((t, _), w) in episodes.iter().zip(&weights) {
        acc.add(t, *w)?;
    }
    Ok(Some(acc.finish()))
}

/// A policy that proposes candidates given the current partial batch.
pub trait SetPolicy {
    /// Draws `count` independent candidates from `π(· | batch)`.
    fn propose<R: Rng + ?Sized>(
        &self,
        ctx: &AcquisitionContext,
        batch: &[Candidate],
        count: usize,
        rng: &mut R,
    ) -> Result<Vec<Candidate>>;
}

/// Conditioning features `{feat(x) : x ∈ B}`.
pub fn set_condition(ctx: &AcquisitionContext, batch: &[Candidate]) -> Result<SetCondition> {
    Ok(SetCondition { features: batch.iter().map(|x| ctx.feature(x)).collect::<Result<Vec<_>>>()? })
}

impl SetPolicy for PolicyParams {
    fn propose<R: Rng + ?Sized>(
        &self,
        ctx: &AcquisitionContext,
        batch: &[Candidate],
        count: usize,
        rng: &mut R,
    ) -> Result<Vec<Candidate>> {
        let cond = self.encode(&Condition::Set(set_condition(ctx, batch)?))?;
        Ok((0..count).map(|_| self.sample_trajectory(&cond, 0.0, rng).candidate).collect())
    }
}

/// `GS(a, π, k, l)`: `k` steps of best-of-`l` sampling from `π(· | B_i)`.
///
/// Proposals already in the batch are skipped; if all `l` are members the
/// step stalls and the batch is left unchanged.
pub fn greedy_sample<P: SetPolicy + ?Sized, R: Rng + ?Sized>(
    ctx: &AcquisitionContext,
    policy: &P,
    k: usize,
    l: usize,
    rng: &mut R,
) -> Result<GreedyTrace> {
    if l == 0 {
        return Err(contract!("greedy sampling needs l >= 1"));
    }
    let mut state = ctx.start(&[])?;
    let mut trace = GreedyTrace::default();
    for _ in 0..k {
        let proposals = policy.propose(ctx, state.members(), l, rng)?;
        let mut best = None;
        for x in proposals {
            let img = ctx.image(&x)?;
            offer(&mut best, &mut state, x, img);
        }
        record(&mut trace, &mut state, best, l as u64);
    }
    trace.value = state.value();
    trace.subset = state.into_members();
    Ok(trace)
}

/// Hyperparameters of the amortized training loop.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    /// Conditioning subsets have size `k ∼ Unif{0, …, n_train − 1}`.
    pub n_train: usize,
    /// `N_u`.
    pub updates: usize,
    /// `N_e`.
    pub episodes: usize,
    /// `N_t`.
    pub behavior_period: usize,
    /// `η`.
    pub learning_rate: f64,
    pub p_rand: f64,
    pub eps_norm: f64,
    pub eval_period: usize,
    /// `l` used by periodic evaluation.
    pub eval_samples: usize,
    /// Subset size built by periodic evaluation.
    pub eval_cardinality: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_train: 4,
            updates: 2000,
            episodes: 128,
            behavior_period: 1,
            learning_rate: 1e-4,
            p_rand: 0.05,
            eps_norm: 1e-8,
            eval_period: 64,
            eval_samples: 16,
            eval_cardinality: 4,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_train", self.n_train),
            ("updates", self.updates),
            ("episodes", self.episodes),
            ("behavior_period", self.behavior_period),
            ("eval_period", self.eval_period),
            ("eval_samples", self.eval_samples),
            ("eval_cardinality", self.eval_cardinality),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(contract!("train config: {name} must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(contract!("train config: learning_rate must be positive"));
        }
        if !(0.0..=1.0).contains(&self.p_rand) {
            return Err(contract!("train config: p_rand must lie in [0, 1]"));
        }
        if !(self.eps_norm > 0.0) {
            return Err(contract!("train config: eps_norm must be positive"));
        }
        Ok(())
    }

    /// `N_u·N_e + evaluations·n·l`.
    pub fn query_budget(&self) -> u64 {
        self.updates as u64 * self.episodes as u64 + self.evaluations() as u64 * self.eval_cost()
    }

    pub fn evaluations(&self) -> usize {
        self.updates / self.eval_period + usize::from(self.updates % self.eval_period != 0)
    }

    fn eval_cost(&self) -> u64 {
        self.eval_cardinality as u64 * self.eval_samples as u64
    }
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainRecord {
    /// 1-based update index.
    pub update: usize,
    pub conditioning_size: usize,
    pub mean_return: f64,
    /// Value of this update's evaluation subset, if one ran.
    pub eval_value: Option<f64>,
    /// Best evaluation value so far (0 before the first evaluation).
    pub best_value: f64,
    /// Cumulative acquisition queries under the budget convention of
    /// [`TrainConfig::query_budget`].
    pub queries: u64,
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    pub log: Vec<TrainRecord>,
    /// Best evaluated subset and its value.
    pub best_subset: Vec<Candidate>,
    pub best_value: f64,
}

/// Amortized training of the set-conditioned policy.
///
/// Per update: refresh the behavior snapshot every `N_t` updates, draw
/// `k ∼ Unif{0..n_train−1}`, build `B ∼ GS(a, θ′, k, 1)`, sample `N_e`
/// episodes from `π_θ(·|B)` with returns `Δ_a(x|B)`, normalize, and step
/// `θ ← θ + η Σ r̂_j ∇θ log π_θ(x_j|B)`.
pub fn train_greedy_policy<R: Rng + ?Sized>(
    ctx: &AcquisitionContext,
    cfg: &TrainConfig,
    theta: PolicyParams,
    rng: &mut R,
    observer: &mut dyn FnMut(&TrainRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if theta.shape().condition != ConditionKind::Set {
        return Err(contract!("greedy-policy training needs a set-conditioned policy"));
    }
    let mut theta = theta;
    let mut behavior = theta.snapshot();
    let mut run = RunState::default();
    for u in 0..cfg.updates {
        if u % cfg.behavior_period == 0 {
            behavior = theta.snapshot();
        }
        let k = rng.random_range(0..cfg.n_train);
        let batch = greedy_sample(ctx, &behavior, k, 1, rng)?.subset;
        let cond = theta.encode(&Condition::Set(set_condition(ctx, &batch)?))?;
        let state = ctx.start(&batch)?;
        let mut state = state;
        let mut episodes = Vec::with_capacity(cfg.episodes);
        for _ in 0..cfg.episodes {
            let t = theta.sample_trajectory(&cond, cfg.p_rand, rng);
            let img = ctx.image(&t.candidate)?;
            let r = state.gain(&t.candidate, &img);
            episodes.push((t, r));
        }
        let mean_return = episodes.iter().map(|(_, r)| r).sum::<f64>() / cfg.episodes as f64;
        if let Some(dir) = reinforce_direction(&theta, &cond, &episodes, cfg.eps_norm)? {
            theta.ascend(&dir, cfg.learning_rate);
        }
        if !theta.is_finite() || !mean_return.is_finite() {
            return Err(Error::NonFinite { update: u + 1, what: "policy parameters or returns".into() });
        }
        run.queries += cfg.episodes as u64;
        let eval = if (u + 1) % cfg.eval_period == 0 || u + 1 == cfg.updates {
            let t = greedy_sample(ctx, &theta, cfg.eval_cardinality, cfg.eval_samples, rng)?;
            run.queries += cfg.eval_cost();
            run.offer(t.subset, t.value);
            Some(t.value)
        } else {
            None
        };
        let rec = TrainRecord {
            update: u + 1,
            conditioning_size: batch.len(),
            mean_return,
            eval_value: eval,
            best_value: run.best_value,
            queries: run.queries,
        };
        observer(&rec);
        run.log.push(rec);
    }
    Ok(TrainOutcome { params: theta, log: run.log, best_subset: run.best_subset, best_value: run.best_value })
}

#[derive(Default)]
struct RunState {
    log: Vec<TrainRecord>,
    best_subset: Vec<Candidate>,
    best_value: f64,
    queries: u64,
    evaluated: bool,
}

impl RunState {
    fn offer(&mut self, subset: Vec<Candidate>, value: f64) {
        if !self.evaluated || value > self.best_value {
            self.evaluated = true;
            self.best_value = value;
            self.best_subset = subset;
        }
    }
}

/// Training of the preference-conditioned baseline: each update draws
/// `w ∼ Dirichlet(1)` and rewards episodes with the scalarized acquisition
/// image. Periodic evaluation builds [`pc_rl_batch`] and scores it with `a`.
pub fn train_preference_policy<R: Rng + ?Sized>(
    ctx: &AcquisitionContext,
    cfg: &TrainConfig,
    scalarization: Scalarization,
    theta: PolicyParams,
    rng: &mut R,
    observer: &mut dyn FnMut(&TrainRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if theta.shape().condition != ConditionKind::Preference {
        return Err(contract!("preference training needs a preference-conditioned policy"));
    }
    let m = ctx.num_objectives();
    let mut theta = theta;
    let mut run = RunState::default();
    for u in 0..cfg.updates {
        let pref = PreferenceCondition::sample_dirichlet(m, rng);
        let cond = theta.encode(&Condition::Preference(pref.clone()))?;
        let mut episodes = Vec::with_capacity(cfg.episodes);
        for _ in 0..cfg.episodes {
            let t = theta.sample_trajectory(&cond, cfg.p_rand, rng);
            let r = scalarize(&pref, &ctx.image(&t.candidate)?, scalarization)?;
            episodes.push((t, r));
        }
        let mean_return = episodes.iter().map(|(_, r)| r).sum::<f64>() / cfg.episodes as f64;
        if let Some(dir) = reinforce_direction(&theta, &cond, &episodes, cfg.eps_norm)? {
            theta.ascend(&dir, cfg.learning_rate);
        }
        if !theta.is_finite() || !mean_return.is_finite() {
            return Err(Error::NonFinite { update: u + 1, what: "policy parameters or returns".into() });
        }
        run.queries += cfg.episodes as u64;
        let eval = if (u + 1) % cfg.eval_period == 0 || u + 1 == cfg.updates {
            let batch = pc_rl_batch(ctx, &theta, cfg.eval_cardinality, cfg.eval_samples, scalarization, rng)?;
            let value = ctx.value(&batch)?;
            run.queries += cfg.eval_cost();
            run.offer(batch, value);
            Some(value)
        } else {
            None
        };
        let rec = TrainRecord {
            update: u + 1,
            conditioning_size: 0,
            mean_return,
            eval_value: eval,
            best_value: run.best_value,
            queries: run.queries,
        };
        observer(&rec);
        run.log.push(rec);
    }
    Ok(TrainOutcome { params: theta, log: run.log, best_subset: run.best_subset, best_value: run.best_value })
}

/// `n` Dirichlet(1) preferences; for each, the best of `l` conditioned
/// samples by scalarized acquisition image. Duplicates are dropped.
pub fn pc_rl_batch<R: Rng + ?Sized>(
    ctx: &AcquisitionContext,
    theta: &PolicyParams,
    n: usize,
    l: usize,
    scalarization: Scalarization,
    rng: &mut R,
) -> Result<Vec<Candidate>> {
    if l == 0 {
        return Err(contract!("pc-rl batch needs l >= 1"));
    }
    let m = ctx.num_objectives();
    let mut batch: Vec<Candidate> = Vec::with_capacity(n);
    for _ in 0..n {
        let pref = PreferenceCondition::sample_dirichlet(m, rng);
        let cond = theta.encode(&Condition::Preference(pref.clone()))?;
        let mut best: Option<(Candidate, f64)> = None;
        for _ in 0..l {
            let x = theta.sample_trajectory(&cond, 0.0, rng).candidate;
            let v = scalarize(&pref, &ctx.image(&x)?, scalarization)?;
            if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
                best = Some((x, v));
            }
        }
        if let Some((x, _)) = best {
            if !batch.contains(&x) {
                batch.push(x);
            }
        }
    }
    Ok(batch)
}
