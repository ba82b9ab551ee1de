//! Batch acquisition set functions built on hypervolume improvement.
//!
//! An [`AcquisitionContext`] turns a surrogate, an archive of evaluated
//! images and a reference point into a set function `a(B)` over candidate
//! batches. Three modes are supported:
//!
//! * `Plain`: `HVI(f̃(B))` against the archive.
//! * `DiversifiedObjective`: `HVI(B) + λ·div(B) + λ·Σ_{x∈B} d(x, B_prev)`.
//! * `DiversifiedGuide`: `HVI(B)/2 + λ·div(B) + λ·Σ_{x∈B} d(x, B_prev)`, the
//!   non-oblivious guide for the diversified objective.
//!
//! The constant `λ·div(B_prev)` is dropped everywhere. Batches have set
//! semantics: repeated candidates count once.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{contract, Result};
use crate::pareto::{exclusive_contribution, hvi, ObjectiveVector, ReferencePoint};
use crate::surrogate::Surrogate;
use crate::tasks::{hamming, Candidate};

/// UCB coefficient used for set-conditioning features with statistical surrogates.
pub const DEFAULT_FEATURE_BETA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum AcquisitionMode {
    #[default]
    Plain,
    DiversifiedObjective,
    DiversifiedGuide,
}

/// Half the sum of pairwise Hamming distances over ordered pairs.
pub fn sum_dispersion(set: &[Candidate]) -> f64 {
    let mut total = 0usize;
    for i in 0..set.len() {
        for j in (i + 1)..set.len() {
            total += hamming(&set[i], &set[j]);
        }
    }
    total as f64
}

fn distance_to_set(x: &Candidate, set: &[Candidate]) -> f64 {
    set.iter().map(|y| hamming(x, y)).sum::<usize>() as f64
}

fn dedup_set(batch: &[Candidate]) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = Vec::with_capacity(batch.len());
    for x in batch {
        if !out.contains(x) {
            out.push(x.clone());
        }
    }
    out
}

/// Everything needed to evaluate the batch acquisition `a(B)`.
#[derive(Clone)]
pub struct AcquisitionContext {
    surrogate: Arc<dyn Surrogate>,
    archive: Vec<ObjectiveVector>,
    reference: ReferencePoint,
    beta: f64,
    feature_beta: f64,
    lambda: f64,
    previous: Vec<Candidate>,
    mode: AcquisitionMode,
}

impl core::fmt::Debug for AcquisitionContext {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("AcquisitionContext")
            .field("archive", &self.archive.len())
            .field("reference", &self.reference)
            .field("beta", &self.beta)
            .field("lambda", &self.lambda)
            .field("mode", &self.mode)
            .finish()
    }
}

impl AcquisitionContext {
    /// Plain HVI with an empty archive.
    pub fn new(surrogate: Arc<dyn Surrogate>, reference: ReferencePoint) -> Result<Self> {
        if surrogate.num_objectives() != reference.dim() {
            return Err(contract!(
                "surrogate has {} objectives, reference point {}",
                surrogate.num_objectives(),
                reference.dim()
            ));
        }
        Ok(Self {
            surrogate,
            archive: Vec::new(),
            reference,
            beta: 0.0,
            feature_beta: DEFAULT_FEATURE_BETA,
            lambda: 0.0,
            previous: Vec::new(),
            mode: AcquisitionMode::Plain,
        })
    }

    /// UCB coefficient for acquisition images (ignored by deterministic surrogates).
    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(contract!("beta must be non-negative, got {beta}"));
        }
        self.beta = beta;
        Ok(self)
    }

    pub fn with_feature_beta(mut self, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(contract!("feature beta must be non-negative, got {beta}"));
        }
        self.feature_beta = beta;
        Ok(self)
    }

    pub fn with_diversity(mut self, mode: AcquisitionMode, lambda: f64, previous: Vec<Candidate>) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(contract!("lambda must be non-negative, got {lambda}"));
        }
        self.mode = mode;
        self.lambda = lambda;
        self.previous = previous;
        Ok(self)
    }

    pub fn with_archive_images(mut self, archive: Vec<ObjectiveVector>) -> Result<Self> {
        if let Some(p) = archive.iter().find(|p| p.dim() != self.reference.dim()) {
            return Err(contract!("archive point has {} objectives, expected {}", p.dim(), self.reference.dim()));
        }
        self.archive = archive;
        Ok(self)
    }

    /// Archive made of the acquisition images of already-evaluated candidates.
    pub fn with_archive_candidates(self, evaluated: &[Candidate]) -> Result<Self> {
        let images = evaluated.iter().map(|x| self.image(x)).collect::<Result<Vec<_>>>()?;
        self.with_archive_images(images)
    }

    pub fn surrogate(&self) -> &Arc<dyn Surrogate> {
        &self.surrogate
    }

    pub fn reference(&self) -> &ReferencePoint {
        &self.reference
    }

    pub fn archive(&self) -> &[ObjectiveVector] {
        &self.archive
    }

    pub fn mode(&self) -> AcquisitionMode {
        self.mode
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn num_objectives(&self) -> usize {
        self.reference.dim()
    }

    /// Image used inside HVI: the mean for deterministic surrogates, the UCB
    /// vector otherwise.
    pub fn image(&self, x: &Candidate) -> Result<ObjectiveVector> {
        Ok(self.surrogate.predict(x)?.ucb(self.beta))
    }

    /// Set-conditioning feature of a candidate.
    pub fn feature(&self, x: &Candidate) -> Result<ObjectiveVector> {
        Ok(self.surrogate.predict(x)?.ucb(self.feature_beta))
    }

    fn hvi_weight(&self) -> f64 {
        match self.mode {
            AcquisitionMode::DiversifiedGuide => 0.5,
            _ => 1.0,
        }
    }

    fn diversity_weight(&self) -> f64 {
        match self.mode {
            AcquisitionMode::Plain => 0.0,
            _ => self.lambda,
        }
    }

    /// `a(B)`; zero for the empty batch.
    pub fn value(&self, batch: &[Candidate]) -> Result<f64> {
        let set = dedup_set(batch);
        let images = set.iter().map(|x| self.image(x)).collect::<Result<Vec<_>>>()?;
        self.value_of_set(&set, &images)
    }

    /// `a(set)` for a duplicate-free set with precomputed images.
    pub(crate) fn value_of_set(&self, set: &[Candidate], images: &[ObjectiveVector]) -> Result<f64> {
        let mut v = self.hvi_weight() * hvi(images, &self.archive, &self.reference)?;
        let lam = self.diversity_weight();
        if lam != 0.0 {
            let aux: f64 = set.iter().map(|x| distance_to_set(x, &self.previous)).sum();
            v += lam * (sum_dispersion(set) + aux);
        }
        Ok(v)
    }

    /// `Δ_a(x | B) = a(B ∪ {x}) − a(B)`.
    pub fn marginal_gain(&self, x: &Candidate, batch: &[Candidate]) -> Result<f64> {
        let mut state = self.start(batch)?;
        let img = self.image(x)?;
        Ok(state.gain(x, &img))
    }

    /// Incremental evaluator positioned at batch `batch`.
    pub fn start(&self, batch: &[Candidate]) -> Result<GreedyState<'_>> {
        let mut state = GreedyState {
            ctx: self,
            members: Vec::new(),
            points: self.archive.iter().map(|p| p.as_slice().to_vec()).collect(),
            value: 0.0,
        };
        for x in batch {
            let img = self.image(x)?;
            state.push(x.clone(), &img);
        }
        Ok(state)
    }
}

/// A batch under construction together with the cached data needed for
/// fast marginal gains.
pub struct GreedyState<'a> {
    ctx: &'a AcquisitionContext,
    members: Vec<Candidate>,
    points: Vec<Vec<f64>>,
    value: f64,
}

impl GreedyState<'_> {
    pub fn members(&self) -> &[Candidate] {
        &self.members
    }

    pub fn contains(&self, x: &Candidate) -> bool {
        self.members.contains(x)
    }

    /// Running `a(B)` accumulated from marginal gains.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// `Δ_a(x | B)` given the acquisition image of `x`.
    pub fn gain(&mut self, x: &Candidate, image: &ObjectiveVector) -> f64 {
        if self.contains(x) {
            return 0.0;
        }
        let ctx = self.ctx;
        let others: Vec<&[f64]> = self.points.iter().map(|p| p.as_slice()).collect();
        let mut g = ctx.hvi_weight() * exclusive_contribution(image.as_slice(), &others, ctx.reference.as_slice());
        let lam = ctx.diversity_weight();
        if lam != 0.0 {
            g += lam * (distance_to_set(x, &self.members) + distance_to_set(x, &ctx.previous));
        }
        g
    }

    /// Adds `x` to the batch and returns its marginal gain.
    pub fn push(&mut self, x: Candidate, image: &ObjectiveVector) -> f64 {
        let g = self.gain(&x, image);
        if !self.contains(&x) {
            self.points.push(image.as_slice().to_vec());
            self.members.push(x);
            self.value += g;
        }
        g
    }

    pub fn into_members(self) -> Vec<Candidate> {
        self.members
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pareto::{hvi as hvi_fn, marginal_hvi};
    use crate::surrogate::DeterministicSurrogate;
    use crate::tasks::{BigramTask, Objective, SequenceSpace};
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn task() -> (SequenceSpace, BigramTask) {
        let s = SequenceSpace::new("ABC", 2, 4).unwrap();
        let t = BigramTask::new(s.clone(), &["AB", "BC"]).unwrap();
        (s, t)
    }

    fn ctx(t: BigramTask) -> AcquisitionContext {
        AcquisitionContext::new(Arc::new(DeterministicSurrogate(t)), ReferencePoint::origin(2)).unwrap()
    }

    fn random_cands(s: &SequenceSpace, n: usize, rng: &mut ChaCha8Rng) -> Vec<Candidate> {
        (0..n)
            .map(|_| {
                let len = rng.random_range(s.min_len()..=s.max_len());
                Candidate((0..len).map(|_| rng.random_range(0..s.vocab_size() as u8)).collect())
            })
            .collect()
    }

    #[test]
    fn dispersion_examples() {
        let s = SequenceSpace::new("AB", 1, 2).unwrap();
        let p = |v: &[&str]| v.iter().map(|x| s.parse(x).unwrap()).collect::<Vec<_>>();
        assert_eq!(sum_dispersion(&p(&["AA"])), 0.0);
        assert_eq!(sum_dispersion(&p(&["AA", "AB"])), 1.0);
        assert_eq!(sum_dispersion(&p(&["AA", "AB", "BB"])), 4.0);
    }

    #[test]
    fn empty_batch_is_zero_in_every_mode() {
        let (s, t) = task();
        let prev = vec![s.parse("ABC").unwrap()];
        for mode in [AcquisitionMode::Plain, AcquisitionMode::DiversifiedObjective, AcquisitionMode::DiversifiedGuide] {
            let c = ctx(t.clone()).with_diversity(mode, 0.3, prev.clone()).unwrap();
            assert_eq!(c.value(&[]).unwrap(), 0.0);
        }
    }

    #[test]
    fn plain_mode_is_hvi_of_images() {
        let (s, t) = task();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let archive = random_cands(&s, 3, &mut rng);
        let c = ctx(t.clone()).with_archive_candidates(&archive).unwrap();
        for _ in 0..50 {
            let b = random_cands(&s, 3, &mut rng);
            let imgs: Vec<_> = b.iter().map(|x| t.evaluate(x).unwrap()).collect();
            let arch: Vec<_> = archive.iter().map(|x| t.evaluate(x).unwrap()).collect();
            let mut uniq = b.clone();
            uniq.sort();
            uniq.dedup();
            let _ = uniq;
            assert_eq!(c.value(&b).unwrap(), hvi_fn(&imgs, &arch, &ReferencePoint::origin(2)).unwrap());
        }
    }

    #[test]
    fn zero_lambda_collapses_modes() {
        let (s, t) = task();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let plain = ctx(t.clone());
        let obj = ctx(t.clone()).with_diversity(AcquisitionMode::DiversifiedObjective, 0.0, vec![]).unwrap();
        let guide = ctx(t).with_diversity(AcquisitionMode::DiversifiedGuide, 0.0, vec![]).unwrap();
        for _ in 0..20 {
            let b = random_cands(&s, 4, &mut rng);
            let p = plain.value(&b).unwrap();
            assert_eq!(obj.value(&b).unwrap(), p);
            assert_eq!(guide.value(&b).unwrap(), p / 2.0);
        }
    }

    #[test]
    fn guide_identity_and_incremental_gains() {
        let (s, t) = task();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let prev = random_cands(&s, 2, &mut rng);
            let lam = rng.random::<f64>();
            let b = random_cands(&s, 4, &mut rng);
            let plain = ctx(t.clone()).value(&b).unwrap();
            let mut set = b.clone();
            set.sort();
            set.dedup();
            let div = sum_dispersion(&set) + set.iter().map(|x| distance_to_set(x, &prev)).sum::<f64>();
            let guide = ctx(t.clone()).with_diversity(AcquisitionMode::DiversifiedGuide, lam, prev.clone()).unwrap();
            let g = guide.value(&b).unwrap();
            assert!((g - (plain / 2.0 + lam * div)).abs() < 1e-12);
            // Accumulated marginal gains reproduce the value.
            let mut st = guide.start(&[]).unwrap();
            for x in &b {
                let img = guide.image(x).unwrap();
                st.push(x.clone(), &img);
            }
            assert!((st.value() - g).abs() < 1e-12);
        }
    }

    #[test]
    fn plain_mode_is_monotone_and_marginals_match_pareto() {
        let (s, t) = task();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = ctx(t.clone());
        for _ in 0..100 {
            let b = random_cands(&s, 3, &mut rng);
            let x = random_cands(&s, 1, &mut rng).pop().unwrap();
            let mut bx = b.clone();
            bx.push(x.clone());
            assert!(c.value(&b).unwrap() <= c.value(&bx).unwrap());
            let imgs: Vec<_> = b.iter().map(|y| t.evaluate(y).unwrap()).collect();
            let expect = if b.contains(&x) {
                0.0
            } else {
                marginal_hvi(&t.evaluate(&x).unwrap(), &imgs, &[], &ReferencePoint::origin(2)).unwrap()
            };
            assert_eq!(c.marginal_gain(&x, &b).unwrap(), expect);
        }
    }

    #[test]
    fn equal_images_give_equal_gains() {
        // Batches with the same image multiset pose the same subproblem.
        let (s, t) = task();
        let all = s.enumerate_all(1000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = ctx(t.clone());
        for _ in 0..100 {
            let b = random_cands(&s, 3, &mut rng);
            let b2: Vec<Candidate> = b
                .iter()
                .map(|x| {
                    let img = t.evaluate(x).unwrap();
                    let same: Vec<&Candidate> = all.iter().filter(|y| t.evaluate(y).unwrap() == img).collect();
                    same[rng.random_range(0..same.len())].clone()
                })
                .collect();
            for x in all.iter().filter(|x| !b.contains(x) && !b2.contains(x)) {
                assert_eq!(c.marginal_gain(x, &b).unwrap(), c.marginal_gain(x, &b2).unwrap());
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let (_, t) = task();
        assert!(ctx(t.clone()).with_beta(-1.0).is_err());
        assert!(ctx(t.clone()).with_diversity(AcquisitionMode::DiversifiedGuide, -0.1, vec![]).is_err());
        assert!(AcquisitionContext::new(Arc::new(DeterministicSurrogate(t)), ReferencePoint::origin(3)).is_err());
    }
}
