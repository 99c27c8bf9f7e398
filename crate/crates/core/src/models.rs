//! Toy models standing in for the draft and target networks.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lm::{Distribution, LanguageModel, Token};

/// Deterministic model whose argmax after `t` is `(t + 1) mod vocab_size`.
#[derive(Debug, Clone)]
pub struct CounterModel {
    vocab_size: usize,
    eos: Option<Token>,
}

impl CounterModel {
    pub fn new(vocab_size: usize) -> Self {
        assert!(vocab_size >= 1, "counter model needs a vocabulary");
        CounterModel { vocab_size, eos: None }
    }

    pub fn with_eos(mut self, eos: Token) -> Self {
        self.eos = Some(eos);
        self
    }
}

impl LanguageModel for CounterModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn eos(&self) -> Option<Token> {
        self.eos
    }

    fn predict(&self, context: &[Token]) -> Distribution {
        let last = *context.last().expect("non-empty context");
        Distribution::one_hot(self.vocab_size, (last + 1) % self.vocab_size as Token)
    }
}

/// Maximum-likelihood n-gram model. Contexts whose `order - 1` suffix never
/// occurred in training (including contexts that are too short) back off to
/// the uniform distribution.
#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    vocab_size: usize,
    eos: Option<Token>,
    table: HashMap<Vec<Token>, Successors>,
}

/// Successor counts sorted by token, and their total.
type Successors = (Vec<(Token, u32)>, u32);

impl NGramModel {
    pub fn train(corpus: &[Token], order: usize, vocab_size: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidModel("n-gram order must be at least 1".into()));
        }
        if corpus.len() <= order {
            return Err(Error::CorpusTooShort { len: corpus.len(), order });
        }
        if let Some(&token) = corpus.iter().find(|&&t| t as usize >= vocab_size) {
            return Err(Error::TokenOutOfVocab { token, vocab_size });
        }

        let mut counts: HashMap<Vec<Token>, HashMap<Token, u32>> = HashMap::new();
        for gram in corpus.windows(order) {
            let (ctx, next) = gram.split_at(order - 1);
            *counts.entry(ctx.to_vec()).or_default().entry(next[0]).or_insert(0) += 1;
        }
        let table = counts
            .into_iter()
            .map(|(ctx, succ)| {
                let mut succ: Vec<_> = succ.into_iter().collect();
                succ.sort_unstable();
                let total = succ.iter().map(|(_, c)| c).sum();
                (ctx, (succ, total))
            })
            .collect();
        Ok(NGramModel { order, vocab_size, eos: None, table })
    }

    pub fn with_eos(mut self, eos: Token) -> Self {
        self.eos = Some(eos);
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

impl LanguageModel for NGramModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn eos(&self) -> Option<Token> {
        self.eos
    }

    fn predict(&self, context: &[Token]) -> Distribution {
        let need = self.order - 1;
        if context.len() < need {
            return Distribution::uniform(self.vocab_size);
        }
        match self.table.get(&context[context.len() - need..]) {
            Some((succ, total)) => {
                let mut probs = vec![0.0; self.vocab_size];
                for &(t, c) in succ {
                    probs[t as usize] = c as f64 / *total as f64;
                }
                Distribution::from_raw(probs)
            }
            None => Distribution::uniform(self.vocab_size),
        }
    }
}

/// Wraps a base model and, at a pseudo-random subset of contexts, swaps the
/// base argmax with a fixed token. Whether a context is perturbed is decided
/// by hashing the seed and the whole context, so the model stays a pure
/// function.
pub struct PerturbedModel {
    base: Box<dyn LanguageModel>,
    epsilon: f64,
    seed: u64,
    swap: Token,
}

impl PerturbedModel {
    pub fn new(base: Box<dyn LanguageModel>, epsilon: f64, seed: u64, swap: Token) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidModel(format!("epsilon {epsilon} outside [0, 1]")));
        }
        if swap as usize >= base.vocab_size() {
            return Err(Error::TokenOutOfVocab { token: swap, vocab_size: base.vocab_size() });
        }
        Ok(PerturbedModel { base, epsilon, seed, swap })
    }

    /// True when the context falls in the perturbed subset.
    pub fn is_perturbed(&self, context: &[Token]) -> bool {
        let h = context_hash(self.seed, context);
        ((h >> 11) as f64 / (1u64 << 53) as f64) < self.epsilon
    }
}

impl LanguageModel for PerturbedModel {
    fn vocab_size(&self) -> usize {
        self.base.vocab_size()
    }

    fn eos(&self) -> Option<Token> {
        self.base.eos()
    }

    fn predict(&self, context: &[Token]) -> Distribution {
        let dist = self.base.predict(context);
        if !self.is_perturbed(context) {
            return dist;
        }
        let vocab = dist.vocab_size();
        let top = dist.argmax() as usize;
        let target = if self.swap as usize != top {
            self.swap as usize
        } else {
            (top + 1) % vocab
        };
        let mut probs = dist.into_probs();
        probs.swap(top, target);
        Distribution::from_raw(probs)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn context_hash(seed: u64, context: &[Token]) -> u64 {
    context.iter().fold(splitmix(seed), |h, &t| splitmix(h ^ u64::from(t)))
}

/// Declarative description of a toy model, as written in bench configs:
///
/// * `counter` or `counter:vocab=10,eos=9`
/// * `ngram:order=3` (trained on the benchmark corpus)
/// * `perturbed:eps=0.1,seed=7,swap=0/ngram:order=3` (wrapper, then `/`, then base)
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Counter { vocab: Option<usize>, eos: Option<Token> },
    NGram { order: usize },
    Perturbed { epsilon: f64, seed: u64, swap: Token, base: Box<ModelSpec> },
}

/// What a [`ModelSpec`] needs to become a model.
#[derive(Debug, Clone, Copy)]
pub struct BuildContext<'a> {
    pub corpus: &'a [Token],
    pub vocab_size: usize,
    pub eos: Option<Token>,
}

impl ModelSpec {
    pub fn build(&self, ctx: &BuildContext<'_>) -> Result<Box<dyn LanguageModel>> {
        Ok(match self {
            ModelSpec::Counter { vocab, eos } => {
                let vocab = vocab.unwrap_or(ctx.vocab_size);
                if vocab == 0 {
                    return Err(Error::InvalidModel("counter vocabulary is empty".into()));
                }
                let mut model = CounterModel::new(vocab);
                if let Some(eos) = eos {
                    if *eos as usize >= vocab {
                        return Err(Error::TokenOutOfVocab { token: *eos, vocab_size: vocab });
                    }
                    model = model.with_eos(*eos);
                }
                Box::new(model)
            }
            ModelSpec::NGram { order } => {
                let mut model = NGramModel::train(ctx.corpus, *order, ctx.vocab_size)?;
                if let Some(eos) = ctx.eos {
                    model = model.with_eos(eos);
                }
                Box::new(model)
            }
            ModelSpec::Perturbed { epsilon, seed, swap, base } => {
                Box::new(PerturbedModel::new(base.build(ctx)?, *epsilon, *seed, *swap)?)
            }
        })
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, base) = match s.split_once('/') {
            Some((head, base)) => (head, Some(base)),
            None => (s, None),
        };
        let (kind, params) = head.split_once(':').unwrap_or((head, ""));
        let mut pairs = Vec::new();
        for item in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidModel(format!("expected key=value, got `{item}`")))?;
            pairs.push((k.trim(), v.trim()));
        }
        let get = |key: &str| pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let parse_num = |key: &str, v: &str| -> Result<u64> {
            v.parse().map_err(|_| Error::InvalidModel(format!("bad value for {key}: `{v}`")))
        };
        let allow = |keys: &[&str]| -> Result<()> {
            match pairs.iter().find(|(k, _)| !keys.contains(k)) {
                Some((k, _)) => Err(Error::InvalidModel(format!("unknown parameter `{k}` for {kind}"))),
                None => Ok(()),
            }
        };

        let spec = match kind.trim() {
            "counter" => {
                allow(&["vocab", "eos"])?;
                ModelSpec::Counter {
                    vocab: get("vocab").map(|v| parse_num("vocab", v)).transpose()?.map(|v| v as usize),
                    eos: get("eos").map(|v| parse_num("eos", v)).transpose()?.map(|v| v as Token),
                }
            }
            "ngram" => {
                allow(&["order"])?;
                let order = get("order").map(|v| parse_num("order", v)).transpose()?.unwrap_or(3);
                ModelSpec::NGram { order: order as usize }
            }
            "perturbed" => {
                allow(&["eps", "seed", "swap"])?;
                let epsilon = match get("eps") {
                    Some(v) => v.parse().map_err(|_| Error::InvalidModel(format!("bad eps `{v}`")))?,
                    None => 0.1,
                };
                let base = base.ok_or_else(|| Error::InvalidModel("perturbed needs a `/base` model".into()))?;
                ModelSpec::Perturbed {
                    epsilon,
                    seed: get("seed").map(|v| parse_num("seed", v)).transpose()?.unwrap_or(0),
                    swap: get("swap").map(|v| parse_num("swap", v)).transpose()?.unwrap_or(0) as Token,
                    base: Box::new(base.parse()?),
                }
            }
            other => return Err(Error::InvalidModel(format!("unknown model kind `{other}`"))),
        };
        if base.is_some() && !matches!(spec, ModelSpec::Perturbed { .. }) {
            return Err(Error::InvalidModel(format!("{kind} does not take a base model")));
        }
        Ok(spec)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Counter { vocab, eos } => {
                let mut params = Vec::new();
                if let Some(v) = vocab {
                    params.push(format!("vocab={v}"));
                }
                if let Some(e) = eos {
                    params.push(format!("eos={e}"));
                }
                if params.is_empty() {
                    write!(f, "counter")
                } else {
                    write!(f, "counter:{}", params.join(","))
                }
            }
            ModelSpec::NGram { order } => write!(f, "ngram:order={order}"),
            ModelSpec::Perturbed { epsilon, seed, swap, base } => {
                write!(f, "perturbed:eps={epsilon},seed={seed},swap={swap}/{base}")
            }
        }
    }
}
