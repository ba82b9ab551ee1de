//! Surrogate models: a deterministic wrapper around a known objective and a
//! bootstrap ensemble of small regressors over k-mer count features.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};

use crate::error::{contract, Result};
use crate::nn::{tanh_backward, tanh_in_place, Adam, Dense, LayoutBuilder};
use crate::pareto::ObjectiveVector;
use crate::rng::{derive_seed, StdRng};
use crate::tasks::{Candidate, Objective};

/// Mean and (for statistical models) spread of a surrogate prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub mean: ObjectiveVector,
    pub std: Option<ObjectiveVector>,
}

impl Prediction {
    /// `mean + beta * std`; the mean itself when there is no spread.
    pub fn ucb(&self, beta: f64) -> ObjectiveVector {
        match &self.std {
            None => self.mean.clone(),
            Some(s) => ObjectiveVector::from_raw(
                self.mean.as_slice().iter().zip(s.as_slice()).map(|(m, s)| m + beta * s).collect(),
            ),
        }
    }
}

/// A model estimating the objective vector of a candidate.
pub trait Surrogate: Send + Sync {
    fn num_objectives(&self) -> usize;
    fn predict(&self, x: &Candidate) -> Result<Prediction>;
}

/// Uses a known objective as the surrogate (single-round, synthetic tasks).
#[derive(Debug, Clone)]
pub struct DeterministicSurrogate<O>(pub O);

impl<O: Objective> Surrogate for DeterministicSurrogate<O> {
    fn num_objectives(&self) -> usize {
        self.0.num_objectives()
    }

    fn predict(&self, x: &Candidate) -> Result<Prediction> {
        Ok(Prediction { mean: self.0.evaluate(x)?, std: None })
    }
}

/// Concatenated 1-mer and 2-mer counts (`V + V²` entries).
pub fn kmer_features(x: &Candidate, vocab_size: usize, out: &mut Vec<f64>) {
    out.clear();
    out.resize(vocab_size + vocab_size * vocab_size, 0.0);
    for &t in x.tokens() {
        out[usize::from(t)] += 1.0;
    }
    for w in x.tokens().windows(2) {
        out[vocab_size + usize::from(w[0]) * vocab_size + usize::from(w[1])] += 1.0;
    }
}

/// Hyperparameters of [`fit_ensemble`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct EnsembleConfig {
    pub members: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { members: 5, hidden: 32, epochs: 300, learning_rate: 1e-2, seed: 0 }
    }
}

/// One regressor: features → tanh hidden layer → objectives, on
/// standardized inputs and outputs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Member {
    pub params: Vec<f64>,
    pub hidden_layer: Dense,
    pub output_layer: Dense,
    /// Training MSE before the first and after the last epoch.
    pub loss_before: f64,
    pub loss_after: f64,
}

/// A bootstrap deep ensemble.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleSurrogate {
    pub vocab_size: usize,
    pub num_objectives: usize,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    pub target_mean: Vec<f64>,
    pub target_scale: Vec<f64>,
    pub members: Vec<Member>,
}

struct Scratch {
    feat: Vec<f64>,
    hidden: Vec<f64>,
    out: Vec<f64>,
}

impl Member {
    fn forward(&self, x: &[f64], s: &mut Scratch) {
        s.hidden.resize(self.hidden_layer.outputs, 0.0);
        s.out.resize(self.output_layer.outputs, 0.0);
        self.hidden_layer.forward(&self.params, x, &mut s.hidden);
        tanh_in_place(&mut s.hidden);
        self.output_layer.forward(&self.params, &s.hidden, &mut s.out);
    }
}

impl EnsembleSurrogate {
    fn standardized_features(&self, x: &Candidate, out: &mut Vec<f64>) {
        kmer_features(x, self.vocab_size, out);
        for ((f, m), s) in out.iter_mut().zip(&self.feature_mean).zip(&self.feature_scale) {
            *f = (*f - m) / s;
        }
    }

    /// Per-member predictions in original target units.
    pub fn member_predictions(&self, x: &Candidate) -> Vec<Vec<f64>> {
        let mut s = Scratch { feat: Vec::new(), hidden: Vec::new(), out: Vec::new() };
        self.standardized_features(x, &mut s.feat);
        let feat = core::mem::take(&mut s.feat);
        self.members
            .iter()
            .map(|mem| {
                mem.forward(&feat, &mut s);
                s.out
                    .iter()
                    .zip(&self.target_mean)
                    .zip(&self.target_scale)
                    .map(|((o, m), sc)| o * sc + m)
                    .collect()
            })
            .collect()
    }
}

impl Surrogate for EnsembleSurrogate {
    fn num_objectives(&self) -> usize {
        self.num_objectives
    }

    fn predict(&self, x: &Candidate) -> Result<Prediction> {
        let preds = self.member_predictions(x);
        let k = preds.len() as f64;
        let m = self.num_objectives;
        let mut mean = alloc::vec![0.0; m];
        for p in &preds {
            for (a, b) in mean.iter_mut().zip(p) {
                *a += b / k;
            }
        }
        // Population standard deviation across members.
        let mut var = alloc::vec![0.0; m];
        for p in &preds {
            for ((v, b), mu) in var.iter_mut().zip(p).zip(&mean) {
                *v += (b - mu) * (b - mu) / k;
            }
        }
        let std = var.into_iter().map(libm::sqrt).collect();
        let mean = ObjectiveVector::new(mean)?;
        Ok(Prediction { mean, std: Some(ObjectiveVector::new(std)?) })
    }
}

/// Upper-confidence vector `mean + beta * std` of an ensemble.
pub fn ucb_vector(s: &EnsembleSurrogate, x: &Candidate, beta: f64) -> Result<ObjectiveVector> {
    if !(beta >= 0.0) {
        return Err(contract!("UCB coefficient must be non-negative, got {beta}"));
    }
    Ok(s.predict(x)?.ucb(beta))
}

fn column_stats(rows: &[Vec<f64>], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut mean = alloc::vec![0.0; dim];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n;
        }
    }
    let mut var = alloc::vec![0.0; dim];
    for r in rows {
        for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let scale = var.into_iter().map(|v| if v > 1e-12 { libm::sqrt(v) } else { 1.0 }).collect();
    (mean, scale)
}

/// Fits `cfg.members` regressors, each on its own bootstrap resample with its
/// own derived seed. Deterministic given `cfg.seed` and `data`.
pub fn fit_ensemble(
    data: &[(Candidate, ObjectiveVector)],
    vocab_size: usize,
    cfg: &EnsembleConfig,
) -> Result<EnsembleSurrogate> {
    if data.len() < 2 {
        return Err(contract!("ensemble needs at least 2 training points, got {}", data.len()));
    }
    if cfg.members < 2 || cfg.hidden == 0 {
        return Err(contract!("ensemble needs >= 2 members and a positive hidden width"));
    }
    let m = data[0].1.dim();
    if data.iter().any(|(_, y)| y.dim() != m) {
        return Err(contract!("training targets have mixed dimensions"));
    }
    let fdim = vocab_size + vocab_size * vocab_size;
    let mut feats: Vec<Vec<f64>> = Vec::with_capacity(data.len());
    for (x, _) in data {
        let mut f = Vec::new();
        kmer_features(x, vocab_size, &mut f);
        feats.push(f);
    }
    let targets: Vec<Vec<f64>> = data.iter().map(|(_, y)| y.as_slice().to_vec()).collect();
    let (feature_mean, feature_scale) = column_stats(&feats, fdim);
    let (target_mean, target_scale) = column_stats(&targets, m);
    for f in &mut feats {
        for ((v, mu), s) in f.iter_mut().zip(&feature_mean).zip(&feature_scale) {
            *v = (*v - mu) / s;
        }
    }
    let ys: Vec<Vec<f64>> = targets
        .iter()
        .map(|t| t.iter().zip(&target_mean).zip(&target_scale).map(|((v, mu), s)| (v - mu) / s).collect())
        .collect();

    let members = (0..cfg.members)
        .map(|k| {
            let mut rng = StdRng::seed_from_u64(derive_seed(cfg.seed, k as u64, "ensemble-member"));
            let sample: Vec<usize> = (0..data.len()).map(|_| rng.random_range(0..data.len())).collect();
            train_member(&feats, &ys, &sample, fdim, m, cfg, &mut rng)
        })
        .collect();

    Ok(EnsembleSurrogate {
        vocab_size,
        num_objectives: m,
        feature_mean,
        feature_scale,
        target_mean,
        target_scale,
        members,
    })
}

fn train_member(
    feats: &[Vec<f64>],
    ys: &[Vec<f64>],
    sample: &[usize],
    fdim: usize,
    m: usize,
    cfg: &EnsembleConfig,
    rng: &mut StdRng,
) -> Member {
    let mut lb = LayoutBuilder::default();
    let hidden_layer = lb.dense("hidden", fdim, cfg.hidden);
    let output_layer = lb.dense("output", cfg.hidden, m);
    let mut params = alloc::vec![0.0; lb.total];
    hidden_layer.init_fan_in(&mut params, rng);
    output_layer.zero(&mut params);
    let mut member = Member { params, hidden_layer, output_layer, loss_before: 0.0, loss_after: 0.0 };

    let mut adam = Adam::new(lb.total, cfg.learning_rate);
    let mut grad = alloc::vec![0.0; lb.total];
    let mut s = Scratch { feat: Vec::new(), hidden: Vec::new(), out: Vec::new() };
    let mut dh = alloc::vec![0.0; cfg.hidden];
    let mut dout = alloc::vec![0.0; m];
    let scale = 1.0 / (sample.len() * m) as f64;

    let mut loss = 0.0;
    for epoch in 0..=cfg.epochs {
        grad.fill(0.0);
        loss = 0.0;
        for &i in sample {
            member.forward(&feats[i], &mut s);
            for ((d, o), y) in dout.iter_mut().zip(&s.out).zip(&ys[i]) {
                *d = 2.0 * (o - y) * scale;
                loss += (o - y) * (o - y) * scale;
            }
            if epoch == cfg.epochs {
                continue;
            }
            dh.fill(0.0);
            member.output_layer.backward(&member.params, &mut grad, &s.hidden, &dout, Some(&mut dh));
            tanh_backward(&s.hidden, &mut dh);
            member.hidden_layer.backward(&member.params, &mut grad, &feats[i], &dh, None);
        }
        if epoch == 0 {
            member.loss_before = loss;
        }
        if epoch < cfg.epochs {
            adam.step(&mut member.params, &grad);
        }
    }
    member.loss_after = loss;
    member
}
