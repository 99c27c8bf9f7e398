//! Phrase-level drafting.
//!
//! Each draft step is one forward of the drafting model over a small tree:
//! one branch tries the best pool phrase for the last context token, the
//! remaining `W` branches are the columns of a Jacobi-style lookahead window.
//! The phrase branch yields the greedy-matching part of the phrase plus one
//! correction token; every window column yields a fresh n-gram.

use std::collections::HashSet;

use crate::error::Result;
use crate::lm::{Distribution, Scorer, Token};
use crate::pool::{Phrase, PhrasePool};

/// `(N - 1) x W` token window. Row `l` is level `l`; column `c` is one
/// n-gram in the making.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookaheadState {
    grid: Vec<Vec<Token>>,
    window: usize,
    ngram: usize,
}

impl LookaheadState {
    /// Fills the grid row-major from the most recent context tokens backwards,
    /// cycling when the context is shorter than `W * (N - 1)`.
    pub fn new(context: &[Token], window: usize, ngram: usize) -> Self {
        assert!(window >= 1, "window width must be positive");
        assert!(ngram >= 2, "n-gram order must be at least 2");
        let cells = window * (ngram - 1);
        let recent: Vec<Token> = if context.is_empty() {
            vec![0]
        } else {
            context.iter().rev().take(cells).copied().collect()
        };
        let grid = (0..ngram - 1)
            .map(|level| (0..window).map(|c| recent[(level * window + c) % recent.len()]).collect())
            .collect();
        LookaheadState { grid, window, ngram }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn ngram(&self) -> usize {
        self.ngram
    }

    /// Grid rows, level 0 first.
    pub fn grid(&self) -> &[Vec<Token>] {
        &self.grid
    }

    /// Column `c`, oldest level first.
    pub fn column(&self, c: usize) -> Vec<Token> {
        self.grid.iter().map(|row| row[c]).collect()
    }

    fn set_column(&mut self, c: usize, tokens: &[Token]) {
        for (row, &t) in self.grid.iter_mut().zip(tokens) {
            row[c] = t;
        }
    }
}

/// Same as [`LookaheadState::new`].
pub fn init_lookahead(context: &[Token], window: usize, ngram: usize) -> LookaheadState {
    LookaheadState::new(context, window, ngram)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepOutput {
    /// Tokens to append: the matched phrase prefix plus one correction.
    pub appended: Vec<Token>,
    /// N-grams completed by the window this step.
    pub new_phrases: Vec<Phrase>,
    /// How many phrase tokens matched.
    pub phrase_matched: usize,
    /// Tokens scored on top of the plain next-token position.
    pub tree_tokens: usize,
}

/// One phrase step with a caller-supplied verdict rule.
///
/// `pick` turns the distribution at each phrase position into a verdict; it is
/// called in position order and only as far as the phrase keeps matching.
/// Window columns always advance greedily.
pub fn phrase_step(
    scorer: &mut Scorer<'_>,
    context: &[Token],
    pool: &mut PhrasePool,
    state: &mut LookaheadState,
    beta: usize,
    pick: &mut dyn FnMut(&Distribution) -> Token,
) -> Result<StepOutput> {
    let eos = scorer.model().eos();
    let last = *context.last().ok_or(crate::Error::EmptyContext)?;
    let tail: Vec<Token> = pool
        .lookup_k(last, 1)
        .first()
        .map(|p| p.tokens[1..p.len().min(beta.max(1))].to_vec())
        .unwrap_or_default();

    let mut branches = Vec::with_capacity(1 + state.window);
    branches.push(tail.clone());
    branches.extend((0..state.window).map(|c| state.column(c)));
    let tree_tokens = branches.iter().map(Vec::len).sum();
    let rows = scorer.forward_tree(context, &[], &branches)?;

    let mut appended = Vec::with_capacity(tail.len() + 1);
    let mut matched = 0;
    loop {
        let verdict = pick(&rows[0][matched]);
        appended.push(verdict);
        if Some(verdict) == eos || matched == tail.len() || verdict != tail[matched] {
            break;
        }
        matched += 1;
    }

    let mut fresh = context.to_vec();
    fresh.extend_from_slice(&appended);
    let mut seen = HashSet::new();
    let mut new_phrases = Vec::new();
    let mut reseeded = 0;
    for c in 0..state.window {
        let column = &branches[1 + c];
        let prediction = rows[1 + c].last().expect("rows are non-empty").argmax();
        let mut gram = column.clone();
        gram.push(prediction);

        if seen.insert(gram.clone()) {
            state.set_column(c, &gram[1..]);
            if eos.is_none_or(|e| !gram.contains(&e)) {
                new_phrases.push(Phrase::new(gram));
            }
        } else {
            // converged onto another column's trajectory: restart it from recent tokens
            let seed = recent_window(&fresh, state.ngram - 1, reseeded);
            state.set_column(c, &seed);
            reseeded += 1;
        }
    }

    Ok(StepOutput { appended, new_phrases, phrase_matched: matched, tree_tokens })
}

/// `len` tokens ending `offset` positions before the end of `tokens`,
/// wrapping around when the sequence is short.
fn recent_window(tokens: &[Token], len: usize, offset: usize) -> Vec<Token> {
    let n = tokens.len() as isize;
    let start = n - offset as isize - len as isize;
    (0..len as isize).map(|i| tokens[(start + i).rem_euclid(n) as usize]).collect()
}

/// Greedy phrase step on the drafting model.
pub fn draft_step(
    scorer: &mut Scorer<'_>,
    context: &[Token],
    pool: &mut PhrasePool,
    state: &mut LookaheadState,
    beta: usize,
) -> Result<StepOutput> {
    phrase_step(scorer, context, pool, state, beta, &mut |d| d.argmax())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DraftResult {
    pub tokens: Vec<Token>,
    pub forwards_used: u64,
    pub new_phrases: Vec<Phrase>,
}

impl DraftResult {
    /// Draft tokens per draft forward.
    pub fn reduction_ratio(&self) -> f64 {
        if self.forwards_used == 0 {
            return 0.0;
        }
        self.tokens.len() as f64 / self.forwards_used as f64
    }
}

/// Drafts at least `gamma` tokens (fewer on EOS or when `max_new` is hit),
/// phrase by phrase. Window n-grams go into the pool as soon as they appear.
pub fn generate_draft(
    scorer: &mut Scorer<'_>,
    context: &[Token],
    pool: &mut PhrasePool,
    state: &mut LookaheadState,
    gamma: usize,
    beta: usize,
    max_new: usize,
) -> Result<DraftResult> {
    let eos = scorer.model().eos();
    let limit = max_new.max(1);
    let mut ctx = context.to_vec();
    let mut result = DraftResult::default();
    while result.tokens.len() < gamma.max(1) && result.tokens.len() < limit {
        let step = draft_step(scorer, &ctx, pool, state, beta)?;
        result.forwards_used += 1;
        for phrase in &step.new_phrases {
            if phrase.len() <= pool.max_phrase_len() {
                pool.insert(phrase.clone())?;
            }
        }
        result.new_phrases.extend(step.new_phrases);
        let take = step.appended.len().min(limit - result.tokens.len());
        ctx.extend_from_slice(&step.appended[..take]);
        result.tokens.extend_from_slice(&step.appended[..take]);
        if eos.is_some_and(|e| result.tokens.last() == Some(&e)) {
            break;
        }
    }
    Ok(result)
}

/// Classic drafting: one forward per token.
pub fn generate_draft_tokenwise(
    scorer: &mut Scorer<'_>,
    context: &[Token],
    gamma: usize,
) -> Result<DraftResult> {
    let eos = scorer.model().eos();
    let mut ctx = context.to_vec();
    let mut result = DraftResult::default();
    while result.tokens.len() < gamma.max(1) {
        let t = scorer.next_distribution(&ctx)?.argmax();
        result.forwards_used += 1;
        ctx.push(t);
        result.tokens.push(t);
        if Some(t) == eos {
            break;
        }
    }
    Ok(result)
}
