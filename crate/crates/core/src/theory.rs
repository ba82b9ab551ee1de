//! Empirical checks of the greedy approximation bounds on enumerable
//! instances.
//!
//! * Approximated greedy on a monotone `a`:
//!   `a(B_n) ≥ (1 − e^{−αγ})·a(B*_n)` with `γ = γ_{B_n,n}(a)`.
//! * Non-oblivious greedy guided by `s/2 + λ·div`:
//!   `(s + λ·div)(B_n) ≥ (αγ̂/2)·(s + λ·div)(B*_n)` with
//!   `γ̂ = γ_{B_n ∪ B*_n, n}(s)`.
//!
//! `α` is the smallest per-step ratio `Δ_i / max_x Δ(x | B_i)` of the trace
//! and `γ` the submodularity ratio
//!
//! ```text
//! γ_{B,n}(a) = min_{S ⊆ X, B′ ⊆ B∖S, |S| ≤ n}  Σ_{x∈S} Δ(x|B′) / (a(B′∪S) − a(B′)),   0/0 := 1
//! ```
//!
//! Everything is computed by exhaustive enumeration over the ground set.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;

use crate::acquisition::{AcquisitionContext, AcquisitionMode};
use crate::error::{contract, Error, Result};
use crate::pareto::{binomial, next_combination, ObjectiveVector, ReferencePoint};
use crate::rng::StdRng;
use crate::selection::{approx_greedy, exact_greedy, ratio, GreedyTrace, Maximizer, SubsetProblem, TieBreak};
use crate::surrogate::DeterministicSurrogate;
use crate::tasks::{Candidate, SequenceSpace};

/// Default cap on the number of set-function evaluations of one enumeration.
pub const DEFAULT_THEORY_CAP: u128 = 50_000_000;

/// Relative tolerance absorbing floating-point rounding in bound checks.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// A set function over the ground set `{0, …, ground_size − 1}`.
pub trait SetFunction {
    fn ground_size(&self) -> usize;
    /// Value of a duplicate-free index set.
    fn value(&self, set: &[usize]) -> Result<f64>;
}

/// A closure-backed set function.
pub struct FnSetFunction<F> {
    pub ground_size: usize,
    pub f: F,
}

impl<F: Fn(&[usize]) -> f64> SetFunction for FnSetFunction<F> {
    fn ground_size(&self) -> usize {
        self.ground_size
    }

    fn value(&self, set: &[usize]) -> Result<f64> {
        Ok((self.f)(set))
    }
}

/// An acquisition function restricted to an enumerated ground set, with
/// images computed once.
pub struct AcquisitionSetFunction<'a> {
    ctx: &'a AcquisitionContext,
    ground: Vec<Candidate>,
    images: Vec<ObjectiveVector>,
}

impl<'a> AcquisitionSetFunction<'a> {
    pub fn new(ctx: &'a AcquisitionContext, ground: Vec<Candidate>) -> Result<Self> {
        let images = ground.iter().map(|x| ctx.image(x)).collect::<Result<Vec<_>>>()?;
        Ok(Self { ctx, ground, images })
    }

    pub fn ground(&self) -> &[Candidate] {
        &self.ground
    }

    /// Ground indices of `batch`; errors on candidates outside the ground set.
    pub fn indices(&self, batch: &[Candidate]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(batch.len());
        for x in batch {
            let i = self.ground.iter().position(|g| g == x).ok_or_else(|| contract!("candidate outside the ground set"))?;
            if !out.contains(&i) {
                out.push(i);
            }
        }
        Ok(out)
    }
}

impl SetFunction for AcquisitionSetFunction<'_> {
    fn ground_size(&self) -> usize {
        self.ground.len()
    }

    fn value(&self, set: &[usize]) -> Result<f64> {
        let xs: Vec<Candidate> = set.iter().map(|&i| self.ground[i].clone()).collect();
        let ys: Vec<ObjectiveVector> = set.iter().map(|&i| self.images[i].clone()).collect();
        self.ctx.value_of_set(&xs, &ys)
    }
}

fn with(set: &[usize], extra: &[usize]) -> Vec<usize> {
    let mut v = set.to_vec();
    v.extend_from_slice(extra);
    v
}

/// Exact submodularity ratio `γ_{B,n}(a)` by enumerating every `B′ ⊆ B` and
/// every `S` disjoint from `B′` with `2 ≤ |S| ≤ n` (singletons and the empty
/// set give exactly 1).
pub fn submodularity_ratio(a: &dyn SetFunction, b: &[usize], n: usize, cap: u128) -> Result<f64> {
    let mut base: Vec<usize> = b.to_vec();
    base.sort_unstable();
    base.dedup();
    let g = a.ground_size();
    if base.iter().any(|&i| i >= g) {
        return Err(contract!("set index outside the ground set"));
    }
    if base.len() >= 64 {
        return Err(Error::CapExceeded { size: u128::MAX, cap });
    }
    let mut count: u128 = 0;
    for mask in 0u64..(1u64 << base.len()) {
        let free = (g - mask.count_ones() as usize) as u128;
        for j in 2..=n.min(g) {
            count = count.saturating_add(binomial(free, j as u128));
        }
    }
    if count > cap {
        return Err(Error::CapExceeded { size: count, cap });
    }
    let mut gamma: f64 = 1.0;
    for mask in 0u64..(1u64 << base.len()) {
        let sub: Vec<usize> = base.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &i)| i).collect();
        let outside: Vec<usize> = (0..g).filter(|i| !sub.contains(i)).collect();
        let v0 = a.value(&sub)?;
        let gains = outside.iter().map(|&x| Ok(a.value(&with(&sub, &[x]))? - v0)).collect::<Result<Vec<f64>>>()?;
        for size in 2..=n.min(outside.len()) {
            let mut combo: Vec<usize> = (0..size).collect();
            loop {
                let num: f64 = combo.iter().map(|&c| gains[c]).sum();
                let s: Vec<usize> = combo.iter().map(|&c| outside[c]).collect();
                let den = a.value(&with(&sub, &s))? - v0;
                gamma = gamma.min(ratio(num, den));
                if !next_combination(&mut combo, outside.len()) {
                    break;
                }
            }
        }
    }
    Ok(gamma)
}

/// Best `n`-subset of the ground set (all of it if smaller) by exhaustive
/// search; ties keep the lexicographically first index set.
pub fn optimal_subset(a: &dyn SetFunction, n: usize, cap: u128) -> Result<(f64, Vec<usize>)> {
    let g = a.ground_size();
    let k = n.min(g);
    let size = binomial(g as u128, k as u128);
    if size > cap {
        return Err(Error::CapExceeded { size, cap });
    }
    let mut combo: Vec<usize> = (0..k).collect();
    let mut best = (a.value(&combo)?, combo.clone());
    while next_combination(&mut combo, g) {
        let v = a.value(&combo)?;
        if v > best.0 {
            best = (v, combo.clone());
        }
    }
    Ok(best)
}

/// Per-step achieved and maximal marginal gains of an insertion-ordered
/// index sequence, recomputed from set values.
pub fn step_gains(a: &dyn SetFunction, order: &[usize]) -> Result<Vec<(f64, f64)>> {
    let g = a.ground_size();
    let mut out = Vec::with_capacity(order.len());
    let mut current: Vec<usize> = Vec::new();
    for &x in order {
        let v0 = a.value(&current)?;
        let mut best = f64::NEG_INFINITY;
        for y in (0..g).filter(|y| !current.contains(y)) {
            best = best.max(a.value(&with(&current, &[y]))? - v0);
        }
        current.push(x);
        let achieved = a.value(&current)? - v0;
        out.push((achieved, best));
    }
    Ok(out)
}

/// Measured `α`: the smallest per-step `Δ_i / Δ*_i` (0/0 := 1), capped at 1.
pub fn measured_alpha(steps: &[(f64, f64)]) -> f64 {
    steps.iter().map(|&(d, best)| ratio(d, best)).fold(1.0, f64::min)
}

/// `1 − e^{−αγ}`.
pub fn approx_greedy_factor(alpha: f64, gamma: f64) -> f64 {
    1.0 - libm::exp(-alpha * gamma)
}

/// `αγ̂ / 2`.
pub fn non_oblivious_factor(alpha: f64, gamma_hat: f64) -> f64 {
    alpha * gamma_hat / 2.0
}

/// Test hooks that perturb the measured constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundHooks {
    /// Multiplies the measured `γ`.
    pub gamma_scale: f64,
    /// Replaces the measured `α`.
    pub alpha_override: Option<f64>,
}

impl Default for BoundHooks {
    fn default() -> Self {
        Self { gamma_scale: 1.0, alpha_override: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Bound {
    ApproxGreedy,
    NonOblivious,
}

/// Outcome of one bound check.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundReport {
    pub bound: Bound,
    pub instance: String,
    pub n: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub achieved: f64,
    pub optimal: f64,
    /// Guaranteed approximation factor.
    pub factor: f64,
    /// `achieved − factor·optimal`.
    pub slack: f64,
    pub violated: bool,
}

fn finish(bound: Bound, instance: String, n: usize, alpha: f64, gamma: f64, achieved: f64, optimal: f64) -> BoundReport {
    let factor = match bound {
        Bound::ApproxGreedy => approx_greedy_factor(alpha, gamma),
        Bound::NonOblivious => non_oblivious_factor(alpha, gamma),
    };
    let slack = achieved - factor * optimal;
    let violated = slack < -BOUND_TOLERANCE * optimal.abs().max(1.0);
    BoundReport { bound, instance, n, alpha, gamma, achieved, optimal, factor, slack, violated }
}

/// Checks `a(B_n) ≥ (1 − e^{−αγ})·a(B*_n)` for a trace built on `problem`.
pub fn verify_approx_greedy_bound(problem: &SubsetProblem, trace: &GreedyTrace, hooks: BoundHooks, cap: u128) -> Result<BoundReport> {
    let ground = problem.space.enumerate_all(cap)?;
    let a = AcquisitionSetFunction::new(&problem.acquisition, ground)?;
    let order = a.indices(&trace.subset)?;
    let mut steps = step_gains(&a, &order)?;
    // A stalled step counts as a zero-gain step.
    for _ in trace.steps.iter().filter(|s| s.stalled()) {
        steps.push((0.0, f64::INFINITY));
    }
    let alpha = hooks.alpha_override.unwrap_or_else(|| measured_alpha(&steps).min(1.0));
    let gamma = submodularity_ratio(&a, &order, problem.n, cap)? * hooks.gamma_scale;
    let achieved = a.value(&order)?;
    let (optimal, _) = optimal_subset(&a, problem.n, cap)?;
    let instance = format!("|X|={} n={} m={}", a.ground_size(), problem.n, problem.acquisition.num_objectives());
    Ok(finish(Bound::ApproxGreedy, instance, problem.n, alpha, gamma, achieved, optimal))
}

/// Checks the non-oblivious bound for a trace built by greedy on the guide
/// `s/2 + λ·div`, where `problem.acquisition` is the plain `s`.
pub fn verify_non_oblivious_bound(
    problem: &SubsetProblem,
    lambda: f64,
    trace: &GreedyTrace,
    hooks: BoundHooks,
    cap: u128,
) -> Result<BoundReport> {
    let s_ctx = &problem.acquisition;
    if s_ctx.mode() != AcquisitionMode::Plain {
        return Err(contract!("the submodular part must be a plain acquisition"));
    }
    let obj_ctx = s_ctx.clone().with_diversity(AcquisitionMode::DiversifiedObjective, lambda, Vec::new())?;
    let guide_ctx = s_ctx.clone().with_diversity(AcquisitionMode::DiversifiedGuide, lambda, Vec::new())?;
    let ground = problem.space.enumerate_all(cap)?;
    let s = AcquisitionSetFunction::new(s_ctx, ground.clone())?;
    let obj = AcquisitionSetFunction::new(&obj_ctx, ground.clone())?;
    let guide = AcquisitionSetFunction::new(&guide_ctx, ground)?;
    let order = guide.indices(&trace.subset)?;
    let mut steps = step_gains(&guide, &order)?;
    for _ in trace.steps.iter().filter(|s| s.stalled()) {
        steps.push((0.0, f64::INFINITY));
    }
    let alpha = hooks.alpha_override.unwrap_or_else(|| measured_alpha(&steps).min(1.0));
    let (optimal, best) = optimal_subset(&obj, problem.n, cap)?;
    let mut union = order.clone();
    for i in best {
        if !union.contains(&i) {
            union.push(i);
        }
    }
    let gamma = submodularity_ratio(&s, &union, problem.n, cap)? * hooks.gamma_scale;
    let achieved = obj.value(&order)?;
    let instance = format!("|X|={} n={} m={} lambda={lambda}", obj.ground_size(), problem.n, s_ctx.num_objectives());
    Ok(finish(Bound::NonOblivious, instance, problem.n, alpha, gamma, achieved, optimal))
}

/// A random tiny HVI instance: a small sequence space whose candidates get
/// random images in `[0, 1]^m`, plus a random archive.
#[derive(Debug, Clone)]
pub struct FuzzInstance {
    pub problem: SubsetProblem,
    pub description: String,
}

/// Draws a fuzz instance with at most `max_ground` candidates.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, max_ground: usize) -> Result<FuzzInstance> {
    let shapes: [(&str, usize, usize); 6] =
        [("AB", 2, 2), ("AB", 1, 3), ("AB", 3, 4), ("ABC", 2, 2), ("ABC", 1, 3), ("ABCD", 2, 2)];
    let usable: Vec<_> = shapes
        .iter()
        .filter(|(v, lo, hi)| SequenceSpace::new(v, *lo, *hi).map(|s| s.size() <= max_ground as u128).unwrap_or(false))
        .collect();
    if usable.is_empty() {
        return Err(contract!("max_ground {max_ground} too small for any fuzz space"));
    }
    let &&(vocab, lo, hi) = &usable[rng.random_range(0..usable.len())];
    let space = SequenceSpace::new(vocab, lo, hi)?;
    let m = rng.random_range(2..=3);
    let n = rng.random_range(1..=3);
    let mut table = BTreeMap::new();
    for x in space.enumerate_all(max_ground as u128)? {
        let y: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        table.insert(x, ObjectiveVector::new(y)?);
    }
    let archive: Vec<ObjectiveVector> = (0..rng.random_range(0..=2))
        .map(|_| ObjectiveVector::new((0..m).map(|_| 0.6 * rng.random::<f64>()).collect()))
        .collect::<Result<_>>()?;
    let table = Arc::new(table);
    let f = (m, move |x: &Candidate| table[x].clone());
    let ctx = AcquisitionContext::new(Arc::new(DeterministicSurrogate(f)), ReferencePoint::origin(m))?
        .with_archive_images(archive.clone())?;
    let description = format!("space {vocab}[{lo}..{hi}] m={m} n={n} archive={}", archive.len());
    Ok(FuzzInstance { problem: SubsetProblem::new(ctx, space, n)?, description })
}

/// Trace used by the fuzzers: exact greedy on even seeds, random sampling
/// with a small budget on odd ones, so both `α = 1` and `α < 1` occur.
pub fn fuzz_trace(problem: &SubsetProblem, rng: &mut StdRng, exact: bool) -> Result<GreedyTrace> {
    if exact {
        exact_greedy(problem, TieBreak::Lexicographic, problem.space.size())
    } else {
        let budget = rng.random_range(1..=4);
        approx_greedy(problem, &Maximizer::RandomSampling, budget, rng)
    }
}

/// One randomized check of the approximated-greedy bound.
pub fn fuzz_approx_greedy_bound(seed: u64, hooks: BoundHooks) -> Result<BoundReport> {
    let mut rng = <StdRng as rand::SeedableRng>::seed_from_u64(seed);
    let inst = random_instance(&mut rng, 32)?;
    let trace = fuzz_trace(&inst.problem, &mut rng, seed % 2 == 0)?;
    let mut report = verify_approx_greedy_bound(&inst.problem, &trace, hooks, DEFAULT_THEORY_CAP)?;
    report.instance = format!("seed {seed}: {}", inst.description);
    Ok(report)
}

/// One randomized check of the non-oblivious bound with Hamming dispersion.
pub fn fuzz_non_oblivious_bound(seed: u64, hooks: BoundHooks) -> Result<BoundReport> {
    let mut rng = <StdRng as rand::SeedableRng>::seed_from_u64(seed);
    let inst = random_instance(&mut rng, 32)?;
    let lambda = [0.0, 0.01, 0.1, 1.0][rng.random_range(0..4)];
    let guide = inst.problem.acquisition.clone().with_diversity(AcquisitionMode::DiversifiedGuide, lambda, Vec::new())?;
    let guide_problem = SubsetProblem::new(guide, inst.problem.space.clone(), inst.problem.n)?;
    let trace = fuzz_trace(&guide_problem, &mut rng, seed % 2 == 0)?;
    let mut report = verify_non_oblivious_bound(&inst.problem, lambda, &trace, hooks, DEFAULT_THEORY_CAP)?;
    report.instance = format!("seed {seed}: {} lambda={lambda}", inst.description);
    Ok(report)
}

/// An instance and a deliberately poor single-step trace: one candidate has
/// image `(1, 1)`, the rest `(0.05, 0.05)`, and the trace picks one of the
/// rest. The measured `α` is 0.0025; claiming `α = 1` must be caught.
pub fn adversarial_instance() -> Result<(SubsetProblem, GreedyTrace)> {
    let space = SequenceSpace::new("AB", 2, 2)?;
    let star = Candidate(alloc::vec![1, 1]);
    let f = (2usize, move |x: &Candidate| {
        let v = if *x == star { 1.0 } else { 0.05 };
        ObjectiveVector::new(alloc::vec![v, v]).expect("finite")
    });
    let ctx = AcquisitionContext::new(Arc::new(DeterministicSurrogate(f)), ReferencePoint::origin(2))?;
    let problem = SubsetProblem::new(ctx, space, 1)?;
    let poor = Candidate(alloc::vec![0, 0]);
    let img = problem.acquisition.image(&poor)?;
    let mut state = problem.acquisition.start(&[])?;
    let gain = state.push(poor.clone(), &img);
    let trace = GreedyTrace {
        steps: alloc::vec![crate::selection::GreedyStep {
            candidate: Some(poor.clone()),
            gain,
            best_gain: None,
            ties: None,
            size: 1,
            queries: 1,
        }],
        subset: alloc::vec![poor],
        value: gain,
    };
    Ok((problem, trace))
}
