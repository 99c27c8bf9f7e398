//! The language-model contract.
//!
//! A model maps a context to a next-token [`Distribution`]. Models are pure and
//! immutable; all cost accounting lives in a [`Scorer`], which a generation
//! loop owns and which counts one forward per single-step, scan or tree call.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;

use crate::error::{Error, Result};

/// Vocabulary id.
pub type Token = u32;

/// Normalization slack accepted when validating a distribution.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// A next-token probability vector over the whole vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Validates non-negativity and normalization.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidModel("empty distribution".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidModel("negative or non-finite probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidModel(format!("probabilities sum to {total}")));
        }
        Ok(Distribution(probs))
    }

    pub fn one_hot(vocab_size: usize, token: Token) -> Self {
        let mut probs = vec![0.0; vocab_size];
        probs[token as usize] = 1.0;
        Distribution(probs)
    }

    pub fn uniform(vocab_size: usize) -> Self {
        Distribution(vec![1.0 / vocab_size as f64; vocab_size])
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Distribution(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn prob(&self, token: Token) -> f64 {
        self.0.get(token as usize).copied().unwrap_or(0.0)
    }

    pub fn vocab_size(&self) -> usize {
        self.0.len()
    }

    /// Most likely token; ties go to the lowest id.
    pub fn argmax(&self) -> Token {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best as Token
    }

    pub(crate) fn into_probs(self) -> Vec<f64> {
        self.0
    }
}

/// Draws a token. Temperature 0 is argmax; otherwise the probabilities are
/// raised to `1/temperature`, renormalized, and sampled from `rng`.
pub fn sample<R: Rng + ?Sized>(dist: &Distribution, temperature: f64, rng: &mut R) -> Token {
    if temperature <= 0.0 {
        return dist.argmax();
    }
    let inv = 1.0 / temperature;
    let weights: Vec<f64> = dist.probs().iter().map(|p| p.powf(inv)).collect();
    match WeightedIndex::new(&weights) {
        Ok(index) => index.sample(rng) as Token,
        // every weight underflowed: the limit of the tempered distribution is the argmax
        Err(_) => dist.argmax(),
    }
}

/// A next-token predictor.
///
/// `predict` may assume every token in `context` is in-vocabulary and the
/// context is non-empty; [`Scorer`] enforces both before calling it.
pub trait LanguageModel: Send + Sync {
    fn vocab_size(&self) -> usize;

    /// End-of-sequence id, if the model has one.
    fn eos(&self) -> Option<Token>;

    fn predict(&self, context: &[Token]) -> Distribution;
}

impl<M: LanguageModel + ?Sized> LanguageModel for &M {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn eos(&self) -> Option<Token> {
        (**self).eos()
    }
    fn predict(&self, context: &[Token]) -> Distribution {
        (**self).predict(context)
    }
}

impl<M: LanguageModel + ?Sized> LanguageModel for Box<M> {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn eos(&self) -> Option<Token> {
        (**self).eos()
    }
    fn predict(&self, context: &[Token]) -> Distribution {
        (**self).predict(context)
    }
}

/// Runs forwards against a shared model and counts them.
pub struct Scorer<'m> {
    model: &'m dyn LanguageModel,
    forwards: u64,
}

impl<'m> Scorer<'m> {
    pub fn new(model: &'m dyn LanguageModel) -> Self {
        Scorer { model, forwards: 0 }
    }

    pub fn model(&self) -> &'m dyn LanguageModel {
        self.model
    }

    /// Forwards issued so far.
    pub fn forwards(&self) -> u64 {
        self.forwards
    }

    fn check(&self, tokens: &[Token]) -> Result<()> {
        let vocab_size = self.model.vocab_size();
        match tokens.iter().find(|&&t| t as usize >= vocab_size) {
            Some(&token) => Err(Error::TokenOutOfVocab { token, vocab_size }),
            None => Ok(()),
        }
    }

    /// Distribution of the token following `context`. One forward.
    pub fn next_distribution(&mut self, context: &[Token]) -> Result<Distribution> {
        if context.is_empty() {
            return Err(Error::EmptyContext);
        }
        self.check(context)?;
        self.forwards += 1;
        Ok(self.model.predict(context))
    }

    /// Scores `tokens` after `prefix` in one forward, returning
    /// `tokens.len() + 1` distributions; element `i` predicts the token after
    /// `prefix ‖ tokens[..i]`.
    pub fn forward_scan(&mut self, prefix: &[Token], tokens: &[Token]) -> Result<Vec<Distribution>> {
        if prefix.is_empty() {
            return Err(Error::EmptyContext);
        }
        if tokens.is_empty() {
            return Err(Error::InvalidModel("forward_scan needs at least one token".into()));
        }
        self.check(prefix)?;
        self.check(tokens)?;
        self.forwards += 1;
        let mut buf = prefix.to_vec();
        Ok(scan_into(self.model, &mut buf, tokens))
    }

    /// Scores several ragged continuations of `prefix ‖ shared` in one
    /// forward. Row `j` covers `shared ‖ branches[j]` and holds
    /// `shared.len() + branches[j].len() + 1` distributions. With no branches
    /// the single row is the scan over `shared` alone.
    pub fn forward_tree(
        &mut self,
        prefix: &[Token],
        shared: &[Token],
        branches: &[Vec<Token>],
    ) -> Result<Vec<Vec<Distribution>>> {
        if prefix.is_empty() {
            return Err(Error::EmptyContext);
        }
        self.check(prefix)?;
        self.check(shared)?;
        for branch in branches {
            self.check(branch)?;
        }
        self.forwards += 1;

        let mut buf = prefix.to_vec();
        let trunk = scan_into(self.model, &mut buf, shared);
        if branches.is_empty() {
            return Ok(vec![trunk]);
        }
        let base_len = buf.len();
        let mut rows = Vec::with_capacity(branches.len());
        for branch in branches {
            buf.truncate(base_len);
            // the trunk's last distribution is the first prediction of every branch
            let mut row = trunk.clone();
            for &t in branch {
                buf.push(t);
                row.push(self.model.predict(&buf));
            }
            rows.push(row);
        }
        Ok(rows)
    }
}

/// Appends `tokens` to `buf` one at a time and collects the distribution at
/// every position, including the one before the first token.
fn scan_into(model: &dyn LanguageModel, buf: &mut Vec<Token>, tokens: &[Token]) -> Vec<Distribution> {
    let mut out = Vec::with_capacity(tokens.len() + 1);
    out.push(model.predict(buf));
    for &t in tokens {
        buf.push(t);
        out.push(model.predict(buf));
    }
    out
}
