//! Target-side verification of a draft and its lengthening suffixes.
//!
//! The draft and every suffix tail are scored in one tree forward. Verdicts
//! are drawn once per tree node: the first position of every suffix sits on
//! the same node as the bonus position of the draft, and suffixes that share
//! a prefix share the draws along it. Under temperature 0 this changes
//! nothing; under sampling it keeps every emitted token an honest draw from
//! the target's conditional.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lm::{sample, Scorer, Token};
use crate::pool::{PhrasePool, ReplaceOutcome};

/// Length of the longest common prefix of `draft` and `verdicts`, capped at
/// `draft.len()`.
pub fn accept_len(draft: &[Token], verdicts: &[Token]) -> usize {
    draft.iter().zip(verdicts).take_while(|(d, v)| d == v).count()
}

/// Positionwise agreements over the shorter of the two sequences.
pub fn match_count(draft: &[Token], verdicts: &[Token]) -> usize {
    draft.iter().zip(verdicts).filter(|(d, v)| d == v).count()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationOutcome {
    /// `γ + 1` verdicts: one per draft position plus the bonus position.
    pub verdicts: Vec<Token>,
    pub accept_len: usize,
    /// Per suffix, verdicts for phrase positions `2..=m+1` where `m` is the
    /// number of phrase tokens scored.
    pub branch_verdicts: Vec<Vec<Token>>,
    /// Per suffix, accepted extension length in `[1, m + 1]`.
    pub branch_accept_len: Vec<usize>,
    pub chosen_branch: Option<usize>,
    pub emitted: Vec<Token>,
    pub match_count: usize,
    /// Suffix tokens scored on top of the draft.
    pub tree_tokens: usize,
}

impl VerificationOutcome {
    pub fn fully_accepted(&self) -> bool {
        self.accept_len + 1 == self.verdicts.len()
    }
}

/// Verifies `draft` after `prefix`, trying each suffix (a phrase starting
/// with the last draft token, truncated to `beta` tokens) as a lengthening.
/// Costs exactly one target forward.
pub fn verify<R: Rng + ?Sized>(
    scorer: &mut Scorer<'_>,
    prefix: &[Token],
    draft: &[Token],
    suffixes: &[Vec<Token>],
    beta: usize,
    temperature: f64,
    rng: &mut R,
) -> Result<VerificationOutcome> {
    let Some(&last) = draft.last() else {
        return Err(Error::InvalidConfig("cannot verify an empty draft".into()));
    };
    for s in suffixes {
        match s.first() {
            Some(&first) if first == last => {}
            Some(&first) => return Err(Error::PhraseKey { expected: last, found: first }),
            None => return Err(Error::PhraseLength { len: 0, max: beta }),
        }
    }
    let tails: Vec<Vec<Token>> = suffixes.iter().map(|s| s[1..s.len().min(beta.max(1))].to_vec()).collect();
    let tree_tokens = tails.iter().map(Vec::len).sum();
    let rows = scorer.forward_tree(prefix, draft, &tails)?;

    let gamma = draft.len();
    let verdicts: Vec<Token> = rows[0][..=gamma].iter().map(|d| sample(d, temperature, rng)).collect();
    let accept = accept_len(draft, &verdicts);
    let matches = match_count(draft, &verdicts);

    // node draws keyed by the suffix tokens consumed after the draft
    let mut nodes: HashMap<Vec<Token>, Token> = HashMap::new();
    nodes.insert(Vec::new(), verdicts[gamma]);
    let mut branch_verdicts = Vec::with_capacity(tails.len());
    for (tail, row) in tails.iter().zip(&rows) {
        let mut vs = Vec::with_capacity(tail.len() + 1);
        for depth in 0..=tail.len() {
            let path = &tail[..depth];
            let v = match nodes.get(path) {
                Some(&v) => v,
                None => {
                    let v = sample(&row[gamma + depth], temperature, rng);
                    nodes.insert(path.to_vec(), v);
                    v
                }
            };
            vs.push(v);
        }
        branch_verdicts.push(vs);
    }
    let branch_accept_len: Vec<usize> = tails
        .iter()
        .zip(&branch_verdicts)
        .map(|(tail, vs)| 1 + accept_len(tail, vs))
        .collect();

    let mut emitted = draft[..accept].to_vec();
    let mut chosen_branch = None;
    if accept < gamma {
        emitted.push(verdicts[accept]);
    } else if tails.is_empty() {
        emitted.push(verdicts[gamma]);
    } else {
        let mut best = 0;
        for (j, &a) in branch_accept_len.iter().enumerate() {
            if a > branch_accept_len[best] {
                best = j;
            }
        }
        let hat = branch_accept_len[best];
        emitted.extend_from_slice(&tails[best][..hat - 1]);
        emitted.push(branch_verdicts[best][hat - 1]);
        chosen_branch = Some(best);
    }

    Ok(VerificationOutcome {
        verdicts,
        accept_len: accept,
        branch_verdicts,
        branch_accept_len,
        chosen_branch,
        emitted,
        match_count: matches,
        tree_tokens,
    })
}

/// Maximal runs of positional matches after the rejection point, each at
/// least `min_run` long, truncated to `max_len`.
pub fn harvest(draft: &[Token], verdicts: &[Token], accept: usize, min_run: usize, max_len: usize) -> Vec<Vec<Token>> {
    let mut out = Vec::new();
    let n = draft.len().min(verdicts.len());
    let mut i = accept + 1;
    while i < n {
        if draft[i] != verdicts[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && draft[i] == verdicts[i] {
            i += 1;
        }
        if i - start >= min_run.max(2) {
            out.push(draft[start..i.min(start + max_len)].to_vec());
        }
    }
    out
}

/// After a fully accepted draft, rewrites each unused suffix with the
/// target's verdicts along it.
pub fn correct_unused_suffixes(
    pool: &mut PhrasePool,
    suffixes: &[Vec<Token>],
    branch_verdicts: &[Vec<Token>],
    chosen: Option<usize>,
    beta: usize,
) -> Result<Vec<ReplaceOutcome>> {
    let mut outcomes = Vec::new();
    for (o, (phrase, vs)) in suffixes.iter().zip(branch_verdicts).enumerate() {
        if Some(o) == chosen {
            continue;
        }
        let used = phrase.len().min(beta).min(vs.len() + 1);
        let mut corrected = Vec::with_capacity(used);
        corrected.push(phrase[0]);
        corrected.extend_from_slice(&vs[..used - 1]);
        outcomes.push(pool.replace_corrected(phrase, &corrected)?);
    }
    Ok(outcomes)
}
