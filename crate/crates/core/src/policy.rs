//! Conditioned autoregressive policies over the appending MDP.
//!
//! ```text
//! π(s | c) = Dec(Enc_cond(c) ⊕ Enc_state(s))
//! ```
//!
//! * `Enc_state`: mean of token + position embeddings plus an embedding of
//!   the last token, followed by two tanh layers.
//! * `Enc_cond` for sets: a deep set with three permutation-equivariant
//!   max-pooling layers (tanh), a max-pool readout and a two-layer head. Each
//!   element is `feat(x)` with an extra emptiness channel; the empty set is
//!   encoded as the single element `(0, …, 0, 1)`.
//! * `Enc_cond` for preferences: a two-layer MLP on the weight vector.
//! * `Dec`: one tanh layer and a linear layer producing logits for every
//!   token plus terminate. Illegal actions are masked out of the softmax.
//!
//! Gradients are exact reverse-mode derivatives of the network's own
//! log-probability. Exploration mixing (`p_rand`) only affects sampling.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{contract, Result};
use crate::nn::{masked_softmax, tanh_backward, tanh_in_place, Dense, LayoutBuilder, Segment};
use crate::pareto::ObjectiveVector;
use crate::tasks::{action_mask, Action, Candidate, SequenceSpace};

/// What the policy is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ConditionKind {
    Set,
    Preference,
}

/// Architecture description; the parameter layout is a pure function of it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolicyShape {
    pub space: SequenceSpace,
    pub num_objectives: usize,
    pub hidden: usize,
    pub condition: ConditionKind,
}

/// Weight initialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Every encoder weight uniform in `±range`.
    Uniform(f64),
    /// Uniform in `±1/sqrt(fan_in)` for dense layers, `±1` for embeddings.
    FanIn,
}

#[derive(Debug, Clone)]
struct SetEncoder {
    layers: [(Dense, Dense); 3],
    head1: Dense,
    head2: Dense,
}

#[derive(Debug, Clone)]
struct PrefEncoder {
    l1: Dense,
    l2: Dense,
}

#[derive(Debug, Clone)]
enum CondEncoder {
    Set(SetEncoder),
    Pref(PrefEncoder),
}

#[derive(Debug, Clone)]
struct Layout {
    tok: Segment,
    pos: Segment,
    last: Segment,
    s1: Dense,
    s2: Dense,
    cond: CondEncoder,
    d1: Dense,
    d2: Dense,
    total: usize,
    segments: Vec<Segment>,
}

impl Layout {
    fn new(shape: &PolicyShape) -> Self {
        let v = shape.space.vocab_size();
        let h = shape.hidden;
        let m = shape.num_objectives;
        let mut lb = LayoutBuilder::default();
        let tok = lb.segment("state.token_embedding", v, h);
        let pos = lb.segment("state.position_embedding", shape.space.max_len(), h);
        let last = lb.segment("state.last_token_embedding", v + 1, h);
        let s1 = lb.dense("state.l1", h, h);
        let s2 = lb.dense("state.l2", h, h);
        let cond = match shape.condition {
            ConditionKind::Set => {
                let d = m + 1;
                let layers = [
                    (lb.dense("set.eq1.gamma", d, h), lb.dense_no_bias("set.eq1.lambda", d, h)),
                    (lb.dense("set.eq2.gamma", h, h), lb.dense_no_bias("set.eq2.lambda", h, h)),
                    (lb.dense("set.eq3.gamma", h, h), lb.dense_no_bias("set.eq3.lambda", h, h)),
                ];
                let head1 = lb.dense("set.head1", h, h);
                let head2 = lb.dense("set.head2", h, h);
                CondEncoder::Set(SetEncoder { layers, head1, head2 })
            }
            ConditionKind::Preference => {
                let l1 = lb.dense("pref.l1", m, h);
                let l2 = lb.dense("pref.l2", h, h);
                CondEncoder::Pref(PrefEncoder { l1, l2 })
            }
        };
        let d1 = lb.dense("decoder.l1", 2 * h, h);
        let d2 = lb.dense("decoder.l2", h, v + 1);
        Layout { tok, pos, last, s1, s2, cond, d1, d2, total: lb.total, segments: lb.segments }
    }

    fn dense_layers(&self) -> Vec<Dense> {
        let mut out = alloc::vec![self.s1, self.s2, self.d1];
        match &self.cond {
            CondEncoder::Set(e) => {
                for (g, l) in &e.layers {
                    out.push(*g);
                    out.push(*l);
                }
                out.push(e.head1);
                out.push(e.head2);
            }
            CondEncoder::Pref(e) => {
                out.push(e.l1);
                out.push(e.l2);
            }
        }
        out
    }
}

/// Flat parameter store of a conditioned policy.
#[derive(Debug, Clone)]
pub struct PolicyParams {
    shape: PolicyShape,
    layout: Layout,
    data: Vec<f64>,
}

impl PartialEq for PolicyParams {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape && self.data == other.data
    }
}

impl PolicyParams {
    /// Randomly initialized parameters. The final decoder layer starts at
    /// zero, so the initial policy is uniform over legal actions.
    pub fn new<R: Rng + ?Sized>(shape: PolicyShape, init: Init, rng: &mut R) -> Result<Self> {
        if shape.hidden == 0 || shape.num_objectives == 0 {
            return Err(contract!("policy needs positive hidden width and objective count"));
        }
        let layout = Layout::new(&shape);
        let mut data = alloc::vec![0.0; layout.total];
        let emb_range = match init {
            Init::Uniform(r) => r,
            Init::FanIn => 1.0,
        };
        for seg in [&layout.tok, &layout.pos, &layout.last] {
            for v in &mut data[seg.range()] {
                *v = rng.random_range(-emb_range..=emb_range);
            }
        }
        for d in layout.dense_layers() {
            match init {
                Init::Uniform(r) => d.init_uniform(&mut data, r, rng),
                Init::FanIn => d.init_fan_in(&mut data, rng),
            }
        }
        layout.d2.zero(&mut data);
        Ok(Self { shape, layout, data })
    }

    /// Rebuilds parameters from a flat vector (e.g. a checkpoint).
    pub fn from_data(shape: PolicyShape, data: Vec<f64>) -> Result<Self> {
        let layout = Layout::new(&shape);
        if data.len() != layout.total {
            return Err(contract!("expected {} parameters, got {}", layout.total, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(contract!("parameters contain non-finite values"));
        }
        Ok(Self { shape, layout, data })
    }

    pub fn shape(&self) -> &PolicyShape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn segments(&self) -> &[Segment] {
        &self.layout.segments
    }

    /// Deep copy used as a frozen behavior policy.
    pub fn snapshot(&self) -> Self {
        self.clone()
    }

    /// `θ ← θ + step · direction`.
    pub fn ascend(&mut self, direction: &[f64], step: f64) {
        for (p, d) in self.data.iter_mut().zip(direction) {
            *p += step * d;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn vocab(&self) -> usize {
        self.shape.space.vocab_size()
    }

    fn hidden(&self) -> usize {
        self.shape.hidden
    }
}

/// Multiset of conditioning features.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SetCondition {
    pub features: Vec<ObjectiveVector>,
}

/// A preference vector on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceCondition {
    weights: Vec<f64>,
}

impl PreferenceCondition {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(contract!("preference {weights:?} is not on the simplex"));
        }
        Ok(Self { weights })
    }

    /// A draw from the flat Dirichlet distribution (`α = 1`).
    pub fn sample_dirichlet<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        let mut w: Vec<f64> = (0..m).map(|_| -libm::log(1.0 - rng.random::<f64>())).collect();
        let s: f64 = w.iter().sum();
        for v in &mut w {
            *v /= s;
        }
        Self { weights: w }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Scalarization {
    Weighted,
    Chebyshev,
}

/// Weighted sum or Chebyshev (`min_i w_i y_i`) scalarization.
pub fn scalarize(pref: &PreferenceCondition, y: &ObjectiveVector, kind: Scalarization) -> Result<f64> {
    if pref.weights.len() != y.dim() {
        return Err(contract!("preference has {} entries, objective {}", pref.weights.len(), y.dim()));
    }
    let terms = pref.weights.iter().zip(y.as_slice()).map(|(w, v)| w * v);
    Ok(match kind {
        Scalarization::Weighted => terms.sum(),
        Scalarization::Chebyshev => terms.fold(f64::INFINITY, f64::min),
    })
}

/// A condition handed to the policy.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Set(SetCondition),
    Preference(PreferenceCondition),
}

#[derive(Debug, Clone)]
struct MaxPool {
    values: Vec<f64>,
    argmax: Vec<usize>,
}

fn column_max(rows: &[Vec<f64>]) -> MaxPool {
    let d = rows[0].len();
    let mut values = rows[0].clone();
    let mut argmax = alloc::vec![0usize; d];
    for (i, r) in rows.iter().enumerate().skip(1) {
        for c in 0..d {
            if r[c] > values[c] {
                values[c] = r[c];
                argmax[c] = i;
            }
        }
    }
    MaxPool { values, argmax }
}

#[derive(Debug, Clone)]
enum CondCache {
    Set {
        /// Inputs of each equivariant layer, then the last layer's output.
        rows: [Vec<Vec<f64>>; 4],
        pools: [MaxPool; 4],
        head_hidden: Vec<f64>,
    },
    Pref {
        input: Vec<f64>,
        hidden: Vec<f64>,
    },
}

/// Forward pass of the condition encoder, kept for sampling and backprop.
#[derive(Debug, Clone)]
pub struct EncodedCondition {
    embedding: Vec<f64>,
    cache: CondCache,
}

impl EncodedCondition {
    pub fn embedding(&self) -> &[f64] {
        &self.embedding
    }
}

/// Result of a rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub actions: Vec<Action>,
    pub candidate: Candidate,
    /// Sum of the network's per-step masked-softmax log-probabilities.
    pub log_prob: f64,
}

/// Per-step activations of the state encoder and decoder.
struct StepCache {
    mask: Vec<bool>,
    u: Vec<f64>,
    a1: Vec<f64>,
    zs: Vec<f64>,
    c: Vec<f64>,
    hd: Vec<f64>,
    logits: Vec<f64>,
    probs: Vec<f64>,
}

impl StepCache {
    fn new(h: usize, actions: usize) -> Self {
        Self {
            mask: Vec::with_capacity(actions),
            u: alloc::vec![0.0; h],
            a1: alloc::vec![0.0; h],
            zs: alloc::vec![0.0; h],
            c: alloc::vec![0.0; 2 * h],
            hd: alloc::vec![0.0; h],
            logits: alloc::vec![0.0; actions],
            probs: alloc::vec![0.0; actions],
        }
    }
}

impl PolicyParams {
    /// Runs the condition encoder.
    pub fn encode(&self, cond: &Condition) -> Result<EncodedCondition> {
        let m = self.shape.num_objectives;
        let h = self.hidden();
        let p = &self.data;
        match (&self.layout.cond, cond) {
            (CondEncoder::Set(enc), Condition::Set(set)) => {
                let input: Vec<Vec<f64>> = if set.features.is_empty() {
                    let mut row = alloc::vec![0.0; m + 1];
                    row[m] = 1.0;
                    alloc::vec![row]
                } else {
                    set.features
                        .iter()
                        .map(|f| {
                            if f.dim() != m {
                                return Err(contract!("feature has {} entries, policy expects {m}", f.dim()));
                            }
                            let mut row = f.as_slice().to_vec();
                            row.push(0.0);
                            Ok(row)
                        })
                        .collect::<Result<_>>()?
                };
                let mut rows: [Vec<Vec<f64>>; 4] = Default::default();
                let mut pools: [MaxPool; 4] = core::array::from_fn(|_| MaxPool { values: Vec::new(), argmax: Vec::new() });
                rows[0] = input;
                for (l, (gamma, lambda)) in enc.layers.iter().enumerate() {
                    let pool = column_max(&rows[l]);
                    let mut shift = alloc::vec![0.0; h];
                    lambda.forward(p, &pool.values, &mut shift);
                    let out: Vec<Vec<f64>> = rows[l]
                        .iter()
                        .map(|r| {
                            let mut y = alloc::vec![0.0; h];
                            gamma.forward(p, r, &mut y);
                            for (a, b) in y.iter_mut().zip(&shift) {
                                *a -= b;
                            }
                            tanh_in_place(&mut y);
                            y
                        })
                        .collect();
                    pools[l] = pool;
                    rows[l + 1] = out;
                }
                pools[3] = column_max(&rows[3]);
                let mut head_hidden = alloc::vec![0.0; h];
                enc.head1.forward(p, &pools[3].values, &mut head_hidden);
                tanh_in_place(&mut head_hidden);
                let mut embedding = alloc::vec![0.0; h];
                enc.head2.forward(p, &head_hidden, &mut embedding);
                Ok(EncodedCondition { embedding, cache: CondCache::Set { rows, pools, head_hidden } })
            }
            (CondEncoder::Pref(enc), Condition::Preference(pref)) => {
                if pref.weights.len() != m {
                    return Err(contract!("preference has {} entries, policy expects {m}", pref.weights.len()));
                }
                let input = pref.weights.clone();
                let mut hidden = alloc::vec![0.0; h];
                enc.l1.forward(p, &input, &mut hidden);
                tanh_in_place(&mut hidden);
                let mut embedding = alloc::vec![0.0; h];
                enc.l2.forward(p, &hidden, &mut embedding);
                Ok(EncodedCondition { embedding, cache: CondCache::Pref { input, hidden } })
            }
            _ => Err(contract!("condition kind does not match policy ({:?})", self.shape.condition)),
        }
    }

    fn step_forward(&self, cond: &EncodedCondition, prefix: &[u8], s: &mut StepCache) {
        let p = &self.data;
        let h = self.hidden();
        let v = self.vocab();
        let len = prefix.len();
        action_mask(&self.shape.space, len, &mut s.mask);

        s.u.fill(0.0);
        if len > 0 {
            let inv = 1.0 / len as f64;
            for (j, &t) in prefix.iter().enumerate() {
                let te = &p[self.layout.tok.offset + usize::from(t) * h..][..h];
                let pe = &p[self.layout.pos.offset + j * h..][..h];
                for k in 0..h {
                    s.u[k] += (te[k] + pe[k]) * inv;
                }
            }
        }
        let last = prefix.last().map_or(v, |&t| usize::from(t));
        let le = &p[self.layout.last.offset + last * h..][..h];
        for k in 0..h {
            s.u[k] += le[k];
        }
        self.layout.s1.forward(p, &s.u, &mut s.a1);
        tanh_in_place(&mut s.a1);
        self.layout.s2.forward(p, &s.a1, &mut s.zs);
        tanh_in_place(&mut s.zs);

        s.c[..h].copy_from_slice(&cond.embedding);
        s.c[h..].copy_from_slice(&s.zs);
        self.layout.d1.forward(p, &s.c, &mut s.hd);
        tanh_in_place(&mut s.hd);
        self.layout.d2.forward(p, &s.hd, &mut s.logits);
        masked_softmax(&s.logits, &s.mask, &mut s.probs);
    }

    /// Backprop of `weight · log π(action | prefix)` after [`Self::step_forward`];
    /// accumulates into `grad` and the condition-embedding gradient `dz_cond`.
    fn step_backward(
        &self,
        s: &StepCache,
        prefix: &[u8],
        action: usize,
        weight: f64,
        grad: &mut [f64],
        dz_cond: &mut [f64],
    ) {
        let p = &self.data;
        let h = self.hidden();
        let v = self.vocab();
        let mut dlogits: Vec<f64> = s.probs.iter().map(|q| -weight * q).collect();
        dlogits[action] += weight;
        for (d, &ok) in dlogits.iter_mut().zip(&s.mask) {
            if !ok {
                *d = 0.0;
            }
        }
        let mut dhd = alloc::vec![0.0; h];
        self.layout.d2.backward(p, grad, &s.hd, &dlogits, Some(&mut dhd));
        tanh_backward(&s.hd, &mut dhd);
        let mut dc = alloc::vec![0.0; 2 * h];
        self.layout.d1.backward(p, grad, &s.c, &dhd, Some(&mut dc));
        for (a, b) in dz_cond.iter_mut().zip(&dc[..h]) {
            *a += b;
        }
        let mut dzs = dc[h..].to_vec();
        tanh_backward(&s.zs, &mut dzs);
        let mut da1 = alloc::vec![0.0; h];
        self.layout.s2.backward(p, grad, &s.a1, &dzs, Some(&mut da1));
        tanh_backward(&s.a1, &mut da1);
        let mut du = alloc::vec![0.0; h];
        self.layout.s1.backward(p, grad, &s.u, &da1, Some(&mut du));

        let last = prefix.last().map_or(v, |&t| usize::from(t));
        for (g, d) in grad[self.layout.last.offset + last * h..][..h].iter_mut().zip(&du) {
            *g += d;
        }
        if !prefix.is_empty() {
            let inv = 1.0 / prefix.len() as f64;
            for (j, &t) in prefix.iter().enumerate() {
                let to = self.layout.tok.offset + usize::from(t) * h;
                let po = self.layout.pos.offset + j * h;
                for k in 0..h {
                    grad[to + k] += du[k] * inv;
                    grad[po + k] += du[k] * inv;
                }
            }
        }
    }

    /// Backprop of the condition embedding gradient through its encoder.
    fn condition_backward(&self, cond: &EncodedCondition, dz: &[f64], grad: &mut [f64]) {
        let p = &self.data;
        let h = self.hidden();
        match (&self.layout.cond, &cond.cache) {
            (CondEncoder::Set(enc), CondCache::Set { rows, pools, head_hidden }) => {
                let mut dhh = alloc::vec![0.0; h];
                enc.head2.backward(p, grad, head_hidden, dz, Some(&mut dhh));
                tanh_backward(head_hidden, &mut dhh);
                let mut dpool = alloc::vec![0.0; h];
                enc.head1.backward(p, grad, &pools[3].values, &dhh, Some(&mut dpool));
                // Gradient w.r.t. the output rows of the current layer.
                let mut drows: Vec<Vec<f64>> = alloc::vec![alloc::vec![0.0; h]; rows[3].len()];
                for (c, &i) in pools[3].argmax.iter().enumerate() {
                    drows[i][c] += dpool[c];
                }
                for l in (0..3).rev() {
                    let (gamma, lambda) = &enc.layers[l];
                    let input = &rows[l];
                    let output = &rows[l + 1];
                    let din = input[0].len();
                    let need_input_grad = l > 0;
                    let mut dinput: Vec<Vec<f64>> = if need_input_grad {
                        alloc::vec![alloc::vec![0.0; din]; input.len()]
                    } else {
                        Vec::new()
                    };
                    let mut dshift = alloc::vec![0.0; h];
                    for i in 0..input.len() {
                        let mut dpre = core::mem::take(&mut drows[i]);
                        tanh_backward(&output[i], &mut dpre);
                        let dx = if need_input_grad { Some(dinput[i].as_mut_slice()) } else { None };
                        gamma.backward(p, grad, &input[i], &dpre, dx);
                        for (a, b) in dshift.iter_mut().zip(&dpre) {
                            *a -= b;
                        }
                    }
                    let mut dmax = alloc::vec![0.0; din];
                    lambda.backward(p, grad, &pools[l].values, &dshift, Some(&mut dmax));
                    if need_input_grad {
                        for (c, &i) in pools[l].argmax.iter().enumerate() {
                            dinput[i][c] += dmax[c];
                        }
                        drows = dinput;
                    }
                }
            }
            (CondEncoder::Pref(enc), CondCache::Pref { input, hidden }) => {
                let mut dh = alloc::vec![0.0; h];
                enc.l2.backward(p, grad, hidden, dz, Some(&mut dh));
                tanh_backward(hidden, &mut dh);
                enc.l1.backward(p, grad, input, &dh, None);
            }
            _ => unreachable!("encoded condition built by this policy"),
        }
    }

    /// Probabilities of every action (tokens, then terminate) at a
    /// non-terminal prefix, mixed with the uniform distribution over legal
    /// actions with weight `p_rand`.
    pub fn action_distribution(&self, prefix: &[u8], cond: &EncodedCondition, p_rand: f64) -> Result<Vec<f64>> {
        if prefix.len() > self.shape.space.max_len() {
            return Err(contract!("prefix longer than max_len"));
        }
        if prefix.iter().any(|&t| usize::from(t) >= self.vocab()) {
            return Err(contract!("prefix has tokens outside the vocabulary"));
        }
        let mut s = StepCache::new(self.hidden(), self.vocab() + 1);
        self.step_forward(cond, prefix, &mut s);
        if p_rand > 0.0 {
            let legal = s.mask.iter().filter(|&&ok| ok).count() as f64;
            for (q, &ok) in s.probs.iter_mut().zip(&s.mask) {
                *q = (1.0 - p_rand) * *q + if ok { p_rand / legal } else { 0.0 };
            }
        }
        Ok(s.probs)
    }

    /// Rolls out one sequence from the empty state.
    pub fn sample_trajectory<R: Rng + ?Sized>(&self, cond: &EncodedCondition, p_rand: f64, rng: &mut R) -> Trajectory {
        let v = self.vocab();
        let mut s = StepCache::new(self.hidden(), v + 1);
        let mut prefix: Vec<u8> = Vec::with_capacity(self.shape.space.max_len());
        let mut actions = Vec::with_capacity(self.shape.space.max_len() + 1);
        let mut log_prob = 0.0;
        loop {
            self.step_forward(cond, &prefix, &mut s);
            let explore = p_rand > 0.0 && rng.random::<f64>() < p_rand;
            let idx = if explore {
                let legal: Vec<usize> = (0..=v).filter(|&i| s.mask[i]).collect();
                legal[rng.random_range(0..legal.len())]
            } else {
                sample_index(&s.probs, rng)
            };
            log_prob += libm::log(s.probs[idx]);
            let action = Action::from_index(idx, v);
            actions.push(action);
            match action {
                Action::Token(t) => prefix.push(t),
                Action::Terminate => break,
            }
        }
        Trajectory { actions, candidate: Candidate(prefix), log_prob }
    }

    /// Network log-probability of a trajectory, with per-step values.
    pub fn trajectory_log_probs(&self, traj: &Trajectory, cond: &EncodedCondition) -> Result<Vec<f64>> {
        let v = self.vocab();
        let mut s = StepCache::new(self.hidden(), v + 1);
        let mut prefix: Vec<u8> = Vec::new();
        let mut out = Vec::with_capacity(traj.actions.len());
        for a in &traj.actions {
            self.check_step(&prefix, *a)?;
            self.step_forward(cond, &prefix, &mut s);
            let idx = a.index(v);
            if !s.mask[idx] {
                return Err(contract!("trajectory takes masked action {a:?} at length {}", prefix.len()));
            }
            out.push(libm::log(s.probs[idx]));
            if let Action::Token(t) = a {
                prefix.push(*t);
            }
        }
        Ok(out)
    }

    /// The unique trajectory producing `x` (its tokens, then terminate),
    /// with its log-probability under this policy.
    pub fn trajectory_of(&self, x: &Candidate, cond: &EncodedCondition) -> Result<Trajectory> {
        if !self.shape.space.contains(x) {
            return Err(contract!("candidate is not in the policy's sequence space"));
        }
        let mut actions: Vec<Action> = x.tokens().iter().map(|&t| Action::Token(t)).collect();
        actions.push(Action::Terminate);
        let mut traj = Trajectory { actions, candidate: x.clone(), log_prob: 0.0 };
        traj.log_prob = self.trajectory_log_probs(&traj, cond)?.iter().sum();
        Ok(traj)
    }

    fn check_step(&self, prefix: &[u8], action: Action) -> Result<()> {
        if let Action::Token(t) = action {
            if usize::from(t) >= self.vocab() {
                return Err(contract!("token {t} outside the vocabulary"));
            }
        }
        if prefix.len() > self.shape.space.max_len() {
            return Err(contract!("trajectory longer than max_len"));
        }
        Ok(())
    }
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &q) in probs.iter().enumerate() {
        if q > 0.0 {
            acc += q;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Accumulates `Σ_j w_j ∇θ log π(x_j | c)` for trajectories sharing one
/// condition; the condition encoder is backpropagated once in [`Self::finish`].
pub struct GradientAccumulator<'a> {
    params: &'a PolicyParams,
    cond: &'a EncodedCondition,
    grad: Vec<f64>,
    dz_cond: Vec<f64>,
    scratch: StepCache,
}

impl<'a> GradientAccumulator<'a> {
    pub fn new(params: &'a PolicyParams, cond: &'a EncodedCondition) -> Self {
        Self {
            params,
            cond,
            grad: alloc::vec![0.0; params.len()],
            dz_cond: alloc::vec![0.0; params.hidden()],
            scratch: StepCache::new(params.hidden(), params.vocab() + 1),
        }
    }

    /// Adds `weight · ∇θ log π(traj)`; returns the trajectory log-probability.
    pub fn add(&mut self, traj: &Trajectory, weight: f64) -> Result<f64> {
        let v = self.params.vocab();
        let mut prefix: Vec<u8> = Vec::with_capacity(traj.actions.len());
        let mut lp = 0.0;
        for a in &traj.actions {
            self.params.check_step(&prefix, *a)?;
            self.params.step_forward(self.cond, &prefix, &mut self.scratch);
            let idx = a.index(v);
            if !self.scratch.mask[idx] {
                return Err(contract!("trajectory takes masked action {a:?} at length {}", prefix.len()));
            }
            lp += libm::log(self.scratch.probs[idx]);
            if weight != 0.0 {
                self.params.step_backward(&self.scratch, &prefix, idx, weight, &mut self.grad, &mut self.dz_cond);
            }
            if let Action::Token(t) = a {
                prefix.push(*t);
            }
        }
        Ok(lp)
    }

    pub fn finish(mut self) -> Vec<f64> {
        if self.dz_cond.iter().any(|&d| d != 0.0) {
            self.params.condition_backward(self.cond, &self.dz_cond, &mut self.grad);
        }
        self.grad
    }
}

/// Trajectory log-probability and its gradient with respect to every parameter.
pub fn log_prob_and_grad(params: &PolicyParams, traj: &Trajectory, cond: &Condition) -> Result<(f64, Vec<f64>)> {
    let enc = params.encode(cond)?;
    let mut acc = GradientAccumulator::new(params, &enc);
    let lp = acc.add(traj, 1.0)?;
    Ok((lp, acc.finish()))
}
