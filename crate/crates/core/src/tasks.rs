//! Fixed-alphabet sequence spaces, bigram-matching objectives and the
//! appending MDP that builds sequences token by token.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{contract, Error, Result};
use crate::pareto::ObjectiveVector;

/// The 20 standard amino acids.
pub const AMINO_ACIDS: &str = "ARNDCQEGHILKMFPSTWYV";

/// Default cap on the number of candidates [`SequenceSpace::enumerate`] yields.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Sequences over `vocab` with length in `min_len..=max_len`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SequenceSpace {
    vocab: Vec<char>,
    min_len: usize,
    max_len: usize,
}

/// A sequence of vocabulary indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Candidate(pub Vec<u8>);

impl Candidate {
    pub fn tokens(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl SequenceSpace {
    pub fn new(vocab: &str, min_len: usize, max_len: usize) -> Result<Self> {
        let chars: Vec<char> = vocab.chars().collect();
        if chars.len() < 2 || chars.len() > usize::from(u8::MAX) {
            return Err(contract!("vocabulary needs 2..=255 tokens, got {}", chars.len()));
        }
        let mut sorted = chars.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != chars.len() {
            return Err(contract!("vocabulary {vocab:?} has repeated tokens"));
        }
        if min_len == 0 || min_len > max_len {
            return Err(contract!("need 1 <= min_len <= max_len, got {min_len}..{max_len}"));
        }
        Ok(Self { vocab: chars, min_len, max_len })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> &[char] {
        &self.vocab
    }

    pub fn min_len(&self) -> usize {
        self.min_len
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Number of candidates, `Σ_{L=min}^{max} |V|^L` (saturating).
    pub fn size(&self) -> u128 {
        let v = self.vocab.len() as u128;
        (self.min_len..=self.max_len)
            .map(|l| v.checked_pow(l as u32).unwrap_or(u128::MAX))
            .fold(0u128, |a, b| a.saturating_add(b))
    }

    pub fn contains(&self, x: &Candidate) -> bool {
        (self.min_len..=self.max_len).contains(&x.len())
            && x.0.iter().all(|&t| usize::from(t) < self.vocab.len())
    }

    pub fn token_index(&self, c: char) -> Option<u8> {
        self.vocab.iter().position(|&v| v == c).map(|i| i as u8)
    }

    /// Parses a string of vocabulary characters. Length bounds are not checked.
    pub fn parse(&self, s: &str) -> Result<Candidate> {
        s.chars()
            .map(|c| self.token_index(c).ok_or_else(|| contract!("token {c:?} not in vocabulary")))
            .collect::<Result<Vec<u8>>>()
            .map(Candidate)
    }

    pub fn render(&self, x: &Candidate) -> String {
        x.0.iter().map(|&t| self.vocab[usize::from(t)]).collect()
    }

    /// Every candidate exactly once, in lexicographic order (a prefix comes
    /// before its extensions). Refuses when the space is larger than `cap`.
    pub fn enumerate(&self, cap: u128) -> Result<Enumerate<'_>> {
        let size = self.size();
        if size > cap {
            return Err(Error::CapExceeded { size, cap });
        }
        Ok(Enumerate { space: self, current: Vec::new(), started: false, done: false })
    }

    /// Collects [`Self::enumerate`] into a vector.
    pub fn enumerate_all(&self, cap: u128) -> Result<Vec<Candidate>> {
        Ok(self.enumerate(cap)?.collect())
    }
}

/// Pre-order walk over the token trie; see [`SequenceSpace::enumerate`].
pub struct Enumerate<'a> {
    space: &'a SequenceSpace,
    current: Vec<u8>,
    started: bool,
    done: bool,
}

impl Enumerate<'_> {
    fn advance(&mut self) -> bool {
        let v = self.space.vocab.len() as u8;
        if !self.started {
            self.started = true;
            self.current.push(0);
            return true;
        }
        if self.current.len() < self.space.max_len {
            self.current.push(0);
            return true;
        }
        while let Some(&last) = self.current.last() {
            if last + 1 < v {
                *self.current.last_mut().unwrap() += 1;
                return true;
            }
            self.current.pop();
        }
        false
    }
}

impl Iterator for Enumerate<'_> {
    type Item = Candidate;

    fn next(&mut self) -> Option<Candidate> {
        if self.done {
            return None;
        }
        loop {
            if !self.advance() {
                self.done = true;
                return None;
            }
            if self.current.len() >= self.space.min_len {
                return Some(Candidate(self.current.clone()));
            }
        }
    }
}

/// Positional mismatch count; the shorter sequence is right-padded with a
/// symbol outside the vocabulary, so every extra position counts once.
pub fn hamming(a: &Candidate, b: &Candidate) -> usize {
    let common = a.0.iter().zip(&b.0).filter(|(x, y)| x != y).count();
    common + a.len().abs_diff(b.len())
}

/// A deterministic vector-valued function on candidates.
pub trait Objective: Send + Sync {
    fn num_objectives(&self) -> usize;
    fn evaluate(&self, x: &Candidate) -> Result<ObjectiveVector>;
}

impl<F> Objective for (usize, F)
where
    F: Fn(&Candidate) -> ObjectiveVector + Send + Sync,
{
    fn num_objectives(&self) -> usize {
        self.0
    }

    fn evaluate(&self, x: &Candidate) -> Result<ObjectiveVector> {
        Ok((self.1)(x))
    }
}

impl<O: Objective + ?Sized> Objective for alloc::sync::Arc<O> {
    fn num_objectives(&self) -> usize {
        (**self).num_objectives()
    }

    fn evaluate(&self, x: &Candidate) -> Result<ObjectiveVector> {
        (**self).evaluate(x)
    }
}

/// Synthetic bigram-matching task: objective `i` counts (overlapping)
/// occurrences of target bigram `i`, normalized by `floor(max_len / 2)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BigramTask {
    space: SequenceSpace,
    targets: Vec<[u8; 2]>,
}

impl BigramTask {
    pub fn new(space: SequenceSpace, targets: &[&str]) -> Result<Self> {
        if targets.is_empty() {
            return Err(contract!("bigram task needs at least one target"));
        }
        let mut parsed = Vec::with_capacity(targets.len());
        for t in targets {
            let c = space.parse(t)?;
            if c.len() != 2 {
                return Err(contract!("target {t:?} is not a bigram"));
            }
            let pair = [c.0[0], c.0[1]];
            if parsed.contains(&pair) {
                return Err(contract!("target {t:?} repeated"));
            }
            parsed.push(pair);
        }
        if space.max_len < 2 {
            return Err(contract!("bigram task needs max_len >= 2"));
        }
        Ok(Self { space, targets: parsed })
    }

    /// The 2/3/4-bigram benchmark tasks over amino acids (lengths 32..=36).
    pub fn benchmark(num_targets: usize) -> Result<Self> {
        const TARGETS: [&str; 4] = ["AV", "VC", "CA", "AW"];
        if !(2..=4).contains(&num_targets) {
            return Err(contract!("benchmark tasks have 2..=4 targets, got {num_targets}"));
        }
        Self::new(SequenceSpace::new(AMINO_ACIDS, 32, 36)?, &TARGETS[..num_targets])
    }

    pub fn space(&self) -> &SequenceSpace {
        &self.space
    }

    pub fn targets(&self) -> &[[u8; 2]] {
        &self.targets
    }

    pub fn normalizer(&self) -> usize {
        self.space.max_len / 2
    }
}

impl Objective for BigramTask {
    fn num_objectives(&self) -> usize {
        self.targets.len()
    }

    fn evaluate(&self, x: &Candidate) -> Result<ObjectiveVector> {
        if !self.space.contains(x) {
            return Err(contract!(
                "candidate of length {} outside {}..={}",
                x.len(),
                self.space.min_len,
                self.space.max_len
            ));
        }
        let denom = self.normalizer() as f64;
        let values = self
            .targets
            .iter()
            .map(|t| x.0.windows(2).filter(|w| w == t).count() as f64 / denom)
            .map(|v| v.min(1.0))
            .collect();
        Ok(ObjectiveVector::from_raw(values))
    }
}

/// A state of the appending MDP.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MdpState {
    pub prefix: Vec<u8>,
    pub terminal: bool,
}

/// An appending-MDP action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Token(u8),
    Terminate,
}

impl Action {
    /// Index in the policy's action vector: tokens first, terminate last.
    pub fn index(self, vocab_size: usize) -> usize {
        match self {
            Action::Token(t) => usize::from(t),
            Action::Terminate => vocab_size,
        }
    }

    pub fn from_index(i: usize, vocab_size: usize) -> Self {
        if i == vocab_size {
            Action::Terminate
        } else {
            Action::Token(i as u8)
        }
    }
}

impl MdpState {
    pub fn initial() -> Self {
        Self::default()
    }
}

/// Legality of each action at a prefix of length `len`, indexed as in
/// [`Action::index`]. Terminating is masked below `min_len`; at `max_len`
/// only terminating remains.
pub fn action_mask(space: &SequenceSpace, len: usize, mask: &mut Vec<bool>) {
    let v = space.vocab_size();
    mask.clear();
    mask.resize(v + 1, len < space.max_len);
    mask[v] = len >= space.min_len;
}

/// One transition of the appending MDP.
pub fn mdp_step(space: &SequenceSpace, state: &MdpState, action: Action) -> Result<MdpState> {
    if state.terminal {
        return Err(contract!("cannot step a terminal state"));
    }
    let len = state.prefix.len();
    match action {
        Action::Token(t) => {
            if usize::from(t) >= space.vocab_size() {
                return Err(contract!("token {t} outside vocabulary"));
            }
            if len < space.max_len {
                let mut prefix = state.prefix.clone();
                prefix.push(t);
                Ok(MdpState { prefix, terminal: false })
            } else {
                Ok(MdpState { prefix: state.prefix.clone(), terminal: true })
            }
        }
        Action::Terminate => {
            if len < space.min_len {
                return Err(contract!("terminate is masked at length {len} < {}", space.min_len));
            }
            Ok(MdpState { prefix: state.prefix.clone(), terminal: true })
        }
    }
}
