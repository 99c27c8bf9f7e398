//! Generation loops: vanilla, speculative, lookahead on the target, and the
//! full phrase-accelerated loop. All four share stopping semantics (EOS is
//! emitted and ends the run; output never exceeds `max_new`) and report the
//! same [`RunMetrics`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::drafting::{generate_draft, generate_draft_tokenwise, phrase_step, DraftResult, LookaheadState};
use crate::error::{Error, Result};
use crate::lm::{sample, LanguageModel, Scorer, Token};
use crate::pool::{Phrase, PhrasePool};
use crate::verification::{correct_unused_suffixes, harvest, verify, VerificationOutcome};

/// Component switches; turning all four off reduces the phrase loop to
/// plain speculative decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Toggles {
    pub phrase_draft: bool,
    pub lengthening: bool,
    pub harvest: bool,
    /// Keep the pool across prompts. Honored by whoever owns the pool.
    pub reuse: bool,
}

impl Toggles {
    pub const ALL: Toggles = Toggles { phrase_draft: true, lengthening: true, harvest: true, reuse: true };
    pub const NONE: Toggles = Toggles { phrase_draft: false, lengthening: false, harvest: false, reuse: false };
}

impl Default for Toggles {
    fn default() -> Self {
        Toggles::ALL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub gamma: usize,
    pub beta: usize,
    pub k: usize,
    pub window: usize,
    pub ngram: usize,
    pub max_new: usize,
    pub temperature: f64,
    pub seed: u64,
    pub toggles: Toggles,
    /// Seed the pool with the prompt's own n-grams before generating.
    pub prompt_warmup: bool,
    /// Shortest harvested run.
    pub min_run: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            gamma: 6,
            beta: 6,
            k: 3,
            window: 16,
            ngram: 4,
            max_new: 128,
            temperature: 0.0,
            seed: 0,
            toggles: Toggles::ALL,
            prompt_warmup: true,
            min_run: 2,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.gamma < 1 {
            return fail("gamma must be at least 1");
        }
        if self.beta < 2 {
            return fail("beta must be at least 2");
        }
        if self.window < 1 {
            return fail("window must be at least 1");
        }
        if self.ngram < 2 {
            return fail("ngram must be at least 2");
        }
        if self.max_new < 1 {
            return fail("max_new must be at least 1");
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return fail("temperature must be a finite non-negative number");
        }
        Ok(())
    }

    /// Longest phrase any component of this configuration produces.
    pub fn phrase_len_ceiling(&self) -> usize {
        self.beta.max(self.ngram)
    }

    /// A pool sized for this configuration.
    pub fn new_pool(&self) -> PhrasePool {
        PhrasePool::new(
            crate::pool::DEFAULT_CAPACITY_PER_KEY,
            self.phrase_len_ceiling().max(crate::pool::DEFAULT_MAX_PHRASE_LEN),
        )
    }
}

/// Counters accumulated over one generation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub tokens_emitted: u64,
    pub target_forwards: u64,
    pub draft_forwards: u64,
    pub iterations: u64,
    /// `accept_len_histogram[a]` counts iterations that accepted `a` draft tokens.
    pub accept_len_histogram: Vec<u64>,
    pub accept_sum: u64,
    pub match_sum: u64,
    pub draft_tokens: u64,
    /// Tokens scored by target tree forwards beyond the main sequence.
    pub tree_tokens: u64,
}

impl RunMetrics {
    /// Generated tokens per target forward.
    pub fn block_efficiency(&self) -> f64 {
        ratio(self.tokens_emitted, self.target_forwards)
    }

    pub fn mean_accept(&self) -> f64 {
        ratio(self.accept_sum, self.iterations)
    }

    pub fn mean_match(&self) -> f64 {
        ratio(self.match_sum, self.iterations)
    }

    /// Draft tokens per draft forward; 0 when nothing was drafted.
    pub fn draft_reduction(&self) -> f64 {
        ratio(self.draft_tokens, self.draft_forwards)
    }

    pub fn modeled_time(&self, cost: &CostModel) -> f64 {
        self.draft_forwards as f64 * cost.t_draft
            + self.target_forwards as f64 * cost.t_target
            + self.tree_tokens as f64 * cost.tree_surcharge_per_token
    }

    fn record_verification(&mut self, draft: &DraftResult, outcome: &VerificationOutcome) {
        self.iterations += 1;
        self.target_forwards += 1;
        self.draft_forwards += draft.forwards_used;
        self.draft_tokens += draft.tokens.len() as u64;
        self.accept_sum += outcome.accept_len as u64;
        self.match_sum += outcome.match_count as u64;
        self.tree_tokens += outcome.tree_tokens as u64;
        if self.accept_len_histogram.len() <= outcome.accept_len {
            self.accept_len_histogram.resize(outcome.accept_len + 1, 0);
        }
        self.accept_len_histogram[outcome.accept_len] += 1;
    }

    /// Adds another run's counters to this one.
    pub fn absorb(&mut self, other: &RunMetrics) {
        self.tokens_emitted += other.tokens_emitted;
        self.target_forwards += other.target_forwards;
        self.draft_forwards += other.draft_forwards;
        self.iterations += other.iterations;
        self.accept_sum += other.accept_sum;
        self.match_sum += other.match_sum;
        self.draft_tokens += other.draft_tokens;
        self.tree_tokens += other.tree_tokens;
        if self.accept_len_histogram.len() < other.accept_len_histogram.len() {
            self.accept_len_histogram.resize(other.accept_len_histogram.len(), 0);
        }
        for (a, b) in self.accept_len_histogram.iter_mut().zip(&other.accept_len_histogram) {
            *a += b;
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Forward costs in arbitrary time units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub t_draft: f64,
    pub t_target: f64,
    /// Extra cost per suffix or window token in a target tree forward.
    pub tree_surcharge_per_token: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel { t_draft: 0.1, t_target: 1.0, tree_surcharge_per_token: 0.0 }
    }
}

/// Vanilla time over modeled time: `tokens * t_T / (draft_fwd * t_S + target_fwd * t_T + surcharge)`.
pub fn modeled_speedup(metrics: &RunMetrics, cost: &CostModel) -> Result<f64> {
    let time = metrics.modeled_time(cost);
    if time <= 0.0 {
        return Err(Error::ZeroCost);
    }
    Ok(metrics.tokens_emitted as f64 * cost.t_target / time)
}

/// Closed-form speedup of a speculative iteration: `(A + 1) t_T / (γ t_S + t_T)`.
pub fn speculative_speedup(mean_accept: f64, gamma: f64, t_draft: f64, t_target: f64) -> f64 {
    (mean_accept + 1.0) * t_target / (gamma * t_draft + t_target)
}

/// Closed form with phrase-accelerated drafting (draft cost divided by `c`)
/// and `mean_accept` measured on the lengthened draft.
pub fn phrase_speedup(mean_accept: f64, gamma: f64, reduction: f64, t_draft: f64, t_target: f64) -> f64 {
    (mean_accept + 1.0) * t_target / (gamma * t_draft / reduction + t_target)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub tokens: Vec<Token>,
    pub metrics: RunMetrics,
}

/// Appends `emitted` to `out`, stopping after EOS or at `max_new`. Returns
/// true when generation is over.
fn emit(out: &mut Vec<Token>, emitted: &[Token], eos: Option<Token>, max_new: usize) -> bool {
    for &t in emitted {
        if out.len() >= max_new {
            return true;
        }
        out.push(t);
        if Some(t) == eos {
            return true;
        }
    }
    out.len() >= max_new
}

fn check_prompt(prompt: &[Token]) -> Result<()> {
    if prompt.is_empty() {
        Err(Error::EmptyContext)
    } else {
        Ok(())
    }
}

/// Inserts every length-`n` window of the prompt.
pub fn warm_pool(pool: &mut PhrasePool, prompt: &[Token], n: usize) -> Result<()> {
    if n < 2 || n > pool.max_phrase_len() {
        return Ok(());
    }
    for gram in prompt.windows(n) {
        pool.insert(Phrase::new(gram.to_vec()))?;
    }
    Ok(())
}

/// One target forward per token.
pub fn generate_vanilla(target: &dyn LanguageModel, prompt: &[Token], cfg: &EngineConfig) -> Result<Generation> {
    cfg.validate()?;
    check_prompt(prompt)?;
    let mut scorer = Scorer::new(target);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ctx = prompt.to_vec();
    let mut out = Vec::new();
    let mut metrics = RunMetrics::default();
    loop {
        let t = sample(&scorer.next_distribution(&ctx)?, cfg.temperature, &mut rng);
        metrics.iterations += 1;
        ctx.push(t);
        if emit(&mut out, &[t], target.eos(), cfg.max_new) {
            break;
        }
    }
    metrics.target_forwards = scorer.forwards();
    metrics.tokens_emitted = out.len() as u64;
    Ok(Generation { tokens: out, metrics })
}

/// Token-by-token drafting of `γ` tokens, then one verification forward.
pub fn generate_speculative(
    target: &dyn LanguageModel,
    draft: &dyn LanguageModel,
    prompt: &[Token],
    cfg: &EngineConfig,
) -> Result<Generation> {
    cfg.validate()?;
    check_prompt(prompt)?;
    let mut target_scorer = Scorer::new(target);
    let mut draft_scorer = Scorer::new(draft);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ctx = prompt.to_vec();
    let mut out = Vec::new();
    let mut metrics = RunMetrics::default();
    loop {
        let remaining = cfg.max_new - out.len();
        let proposal = generate_draft_tokenwise(&mut draft_scorer, &ctx, cfg.gamma.min(remaining))?;
        let outcome = verify(&mut target_scorer, &ctx, &proposal.tokens, &[], cfg.beta, cfg.temperature, &mut rng)?;
        metrics.record_verification(&proposal, &outcome);
        let before = out.len();
        let done = emit(&mut out, &outcome.emitted, target.eos(), cfg.max_new);
        ctx.extend_from_slice(&out[before..]);
        if done {
            break;
        }
    }
    debug_assert_eq!(metrics.target_forwards, target_scorer.forwards());
    debug_assert_eq!(metrics.draft_forwards, draft_scorer.forwards());
    metrics.tokens_emitted = out.len() as u64;
    Ok(Generation { tokens: out, metrics })
}

/// Phrase steps run directly on the target: each forward verifies one pool
/// phrase and advances the lookahead window. The pool is private to the call.
pub fn generate_lookahead_target(target: &dyn LanguageModel, prompt: &[Token], cfg: &EngineConfig) -> Result<Generation> {
    let mut pool = cfg.new_pool();
    generate_lookahead_target_with_pool(target, prompt, cfg, &mut pool)
}

pub fn generate_lookahead_target_with_pool(
    target: &dyn LanguageModel,
    prompt: &[Token],
    cfg: &EngineConfig,
    pool: &mut PhrasePool,
) -> Result<Generation> {
    cfg.validate()?;
    check_prompt(prompt)?;
    if cfg.prompt_warmup {
        warm_pool(pool, prompt, cfg.ngram)?;
    }
    let mut scorer = Scorer::new(target);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = LookaheadState::new(prompt, cfg.window, cfg.ngram);
    let mut ctx = prompt.to_vec();
    let mut out = Vec::new();
    let mut metrics = RunMetrics::default();
    let temperature = cfg.temperature;
    loop {
        let step = phrase_step(&mut scorer, &ctx, pool, &mut state, cfg.beta, &mut |d| sample(d, temperature, &mut rng))?;
        metrics.iterations += 1;
        metrics.tree_tokens += step.tree_tokens as u64;
        for phrase in step.new_phrases {
            pool.insert(phrase)?;
        }
        let before = out.len();
        let done = emit(&mut out, &step.appended, target.eos(), cfg.max_new);
        ctx.extend_from_slice(&out[before..]);
        if done {
            break;
        }
    }
    metrics.target_forwards = scorer.forwards();
    metrics.tokens_emitted = out.len() as u64;
    Ok(Generation { tokens: out, metrics })
}

/// The full loop: phrase-accelerated drafting, `K` lengthening suffixes
/// verified in the same target forward, then harvesting of discarded draft
/// runs and correction of unused suffixes. `pool` may arrive pre-loaded and
/// is left populated; clearing it between prompts is the caller's call.
pub fn generate_ouroboros(
    target: &dyn LanguageModel,
    draft: &dyn LanguageModel,
    prompt: &[Token],
    cfg: &EngineConfig,
    pool: &mut PhrasePool,
) -> Result<Generation> {
    cfg.validate()?;
    check_prompt(prompt)?;
    if cfg.beta > pool.max_phrase_len() {
        return Err(Error::InvalidConfig(format!(
            "beta {} exceeds the pool's phrase length limit {}",
            cfg.beta,
            pool.max_phrase_len()
        )));
    }
    let toggles = cfg.toggles;
    if cfg.prompt_warmup && (toggles.phrase_draft || toggles.lengthening) {
        warm_pool(pool, prompt, cfg.ngram)?;
    }
    let eos = target.eos();
    let mut target_scorer = Scorer::new(target);
    let mut draft_scorer = Scorer::new(draft);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = LookaheadState::new(prompt, cfg.window, cfg.ngram);
    let mut ctx = prompt.to_vec();
    let mut out = Vec::new();
    let mut metrics = RunMetrics::default();

    loop {
        let remaining = cfg.max_new - out.len();
        let gamma = cfg.gamma.min(remaining);
        let proposal = if toggles.phrase_draft {
            generate_draft(&mut draft_scorer, &ctx, pool, &mut state, gamma, cfg.beta, remaining)?
        } else {
            generate_draft_tokenwise(&mut draft_scorer, &ctx, gamma)?
        };
        let last = *proposal.tokens.last().expect("drafts are non-empty");

        let suffixes: Vec<Vec<Token>> = if toggles.lengthening && cfg.k > 0 && Some(last) != eos {
            pool.lookup_k(last, cfg.k).into_iter().map(|p| p.tokens).collect()
        } else {
            Vec::new()
        };
        let outcome = verify(&mut target_scorer, &ctx, &proposal.tokens, &suffixes, cfg.beta, cfg.temperature, &mut rng)?;
        metrics.record_verification(&proposal, &outcome);

        if toggles.harvest {
            if outcome.accept_len < proposal.tokens.len() {
                for run in harvest(&proposal.tokens, &outcome.verdicts, outcome.accept_len, cfg.min_run, pool.max_phrase_len()) {
                    pool.insert(Phrase::new(run))?;
                }
            } else if outcome.chosen_branch.is_some() {
                correct_unused_suffixes(pool, &suffixes, &outcome.branch_verdicts, outcome.chosen_branch, cfg.beta)?;
            }
        }

        let before = out.len();
        let done = emit(&mut out, &outcome.emitted, eos, cfg.max_new);
        ctx.extend_from_slice(&out[before..]);
        if done {
            break;
        }
    }
    debug_assert_eq!(metrics.target_forwards, target_scorer.forwards());
    debug_assert_eq!(metrics.draft_forwards, draft_scorer.forwards());
    metrics.tokens_emitted = out.len() as u64;
    Ok(Generation { tokens: out, metrics })
}
