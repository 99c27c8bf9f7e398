//! The phrase pool: short token sequences keyed by their first token.
//!
//! Buckets are kept sorted by descending `(hits, last_used)`, which is both
//! the lookup order and (reversed) the eviction order. The on-disk format
//! stores hits and bucket order but not the recency clock; loading rebuilds
//! a clock that reproduces the saved order.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::lm::Token;

pub const DEFAULT_CAPACITY_PER_KEY: usize = 16;
pub const DEFAULT_MAX_PHRASE_LEN: usize = 8;

const HEADER_PREFIX: &str = "ouroboros-pool v1 vocab=";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phrase {
    pub tokens: Vec<Token>,
    pub hits: u32,
    pub last_used: u64,
}

impl Phrase {
    pub fn new(tokens: Vec<Token>) -> Self {
        Phrase { tokens, hits: 0, last_used: 0 }
    }

    pub fn with_hits(tokens: Vec<Token>, hits: u32) -> Self {
        Phrase { tokens, hits, last_used: 0 }
    }

    pub fn key(&self) -> Token {
        self.tokens[0]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    fn priority(&self) -> (u32, u64) {
        (self.hits, self.last_used)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted,
    /// The phrase was already present; its hits and recency were bumped.
    Refreshed,
    /// Inserted after evicting the returned entry.
    Evicted(Phrase),
    /// The bucket was full and the new phrase had the lowest priority.
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplaceOutcome {
    Replaced,
    /// The corrected phrase already existed; hits were summed into it.
    Merged,
    /// The phrase to replace was not in the pool. Nothing changed.
    Missing,
}

#[derive(Debug, Clone)]
pub struct PhrasePool {
    buckets: BTreeMap<Token, Vec<Phrase>>,
    capacity_per_key: usize,
    max_phrase_len: usize,
    clock: u64,
}

impl Default for PhrasePool {
    fn default() -> Self {
        PhrasePool::new(DEFAULT_CAPACITY_PER_KEY, DEFAULT_MAX_PHRASE_LEN)
    }
}

/// Equality ignores the absolute clock: two pools are equal when they hold
/// the same phrases with the same hits in the same order.
impl PartialEq for PhrasePool {
    fn eq(&self, other: &Self) -> bool {
        self.capacity_per_key == other.capacity_per_key
            && self.max_phrase_len == other.max_phrase_len
            && self.buckets.len() == other.buckets.len()
            && self.buckets.iter().zip(&other.buckets).all(|((ka, a), (kb, b))| {
                ka == kb
                    && a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| x.tokens == y.tokens && x.hits == y.hits)
            })
    }
}

impl PhrasePool {
    pub fn new(capacity_per_key: usize, max_phrase_len: usize) -> Self {
        assert!(capacity_per_key >= 1, "capacity_per_key must be positive");
        assert!(max_phrase_len >= 2, "phrases have at least two tokens");
        PhrasePool { buckets: BTreeMap::new(), capacity_per_key, max_phrase_len, clock: 0 }
    }

    pub fn capacity_per_key(&self) -> usize {
        self.capacity_per_key
    }

    pub fn max_phrase_len(&self) -> usize {
        self.max_phrase_len
    }

    /// Total number of phrases.
    pub fn len(&self) -> usize {
        self.buckets.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn clear(&mut self) {
        self.buckets.clear();
    }

    /// Phrases starting with `key`, highest priority first.
    pub fn bucket(&self, key: Token) -> &[Phrase] {
        self.buckets.get(&key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Phrase> {
        self.buckets.values().flatten()
    }

    pub fn contains(&self, tokens: &[Token]) -> bool {
        tokens.first().is_some_and(|k| self.bucket(*k).iter().any(|p| p.tokens == tokens))
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len < 2 || len > self.max_phrase_len {
            return Err(Error::PhraseLength { len, max: self.max_phrase_len });
        }
        Ok(())
    }

    pub fn insert(&mut self, phrase: Phrase) -> Result<InsertOutcome> {
        self.check_len(phrase.tokens.len())?;
        let now = self.tick();
        let capacity = self.capacity_per_key;
        let bucket = self.buckets.entry(phrase.key()).or_default();

        if let Some(existing) = bucket.iter_mut().find(|p| p.tokens == phrase.tokens) {
            existing.hits = existing.hits.saturating_add(1);
            existing.last_used = now;
            sort_bucket(bucket);
            return Ok(InsertOutcome::Refreshed);
        }

        let candidate = Phrase { last_used: now, ..phrase };
        if bucket.len() < capacity {
            bucket.push(candidate);
            sort_bucket(bucket);
            return Ok(InsertOutcome::Inserted);
        }
        // sorted descending, so the weakest entry is last
        let weakest = bucket.last().expect("full bucket is non-empty");
        if candidate.priority() < weakest.priority() {
            return Ok(InsertOutcome::Rejected);
        }
        let evicted = bucket.pop().expect("full bucket is non-empty");
        bucket.push(candidate);
        sort_bucket(bucket);
        Ok(InsertOutcome::Evicted(evicted))
    }

    /// Up to `k` phrases starting with `first`, highest priority first.
    /// Returned phrases have their recency refreshed.
    pub fn lookup_k(&mut self, first: Token, k: usize) -> Vec<Phrase> {
        let Some(bucket) = self.buckets.get(&first) else {
            return Vec::new();
        };
        let n = k.min(bucket.len());
        if n == 0 {
            return Vec::new();
        }
        let base = self.clock;
        self.clock += n as u64;
        let bucket = self.buckets.get_mut(&first).expect("bucket checked above");
        // the first result gets the newest tick so the relative order survives
        for (i, phrase) in bucket[..n].iter_mut().enumerate() {
            phrase.last_used = base + (n - i) as u64;
        }
        sort_bucket(bucket);
        bucket[..n].to_vec()
    }

    /// Removes a phrase, returning it if it was present.
    pub fn remove(&mut self, tokens: &[Token]) -> Option<Phrase> {
        let key = *tokens.first()?;
        let bucket = self.buckets.get_mut(&key)?;
        let idx = bucket.iter().position(|p| p.tokens == tokens)?;
        let removed = bucket.remove(idx);
        if bucket.is_empty() {
            self.buckets.remove(&key);
        }
        Some(removed)
    }

    /// Swaps `old` for `corrected`, carrying over the hit count.
    pub fn replace_corrected(&mut self, old: &[Token], corrected: &[Token]) -> Result<ReplaceOutcome> {
        self.check_len(corrected.len())?;
        let (Some(&old_key), Some(&new_key)) = (old.first(), corrected.first()) else {
            return Err(Error::PhraseLength { len: old.len(), max: self.max_phrase_len });
        };
        if old_key != new_key {
            return Err(Error::PhraseKey { expected: old_key, found: new_key });
        }
        let Some(removed) = self.remove(old) else {
            return Ok(ReplaceOutcome::Missing);
        };
        let now = self.tick();
        let bucket = self.buckets.entry(new_key).or_default();
        let outcome = match bucket.iter_mut().find(|p| p.tokens == corrected) {
            Some(existing) => {
                existing.hits = existing.hits.saturating_add(removed.hits);
                existing.last_used = now;
                ReplaceOutcome::Merged
            }
            None => {
                bucket.push(Phrase { tokens: corrected.to_vec(), hits: removed.hits, last_used: now });
                ReplaceOutcome::Replaced
            }
        };
        sort_bucket(bucket);
        Ok(outcome)
    }

    /// Writes the pool in the line-oriented text format.
    pub fn save<W: Write>(&self, mut sink: W, vocab_size: usize) -> Result<()> {
        writeln!(sink, "{HEADER_PREFIX}{vocab_size}")?;
        for phrase in self.iter() {
            write!(sink, "{}", phrase.hits)?;
            for t in &phrase.tokens {
                write!(sink, " {t}")?;
            }
            writeln!(sink)?;
        }
        sink.flush()?;
        Ok(())
    }

    /// Reads a pool written by [`PhrasePool::save`]. Returns the pool and the
    /// vocabulary size recorded in the header.
    pub fn load<R: BufRead>(source: R, capacity_per_key: usize, max_phrase_len: usize) -> Result<(Self, usize)> {
        let mut lines = source.lines();
        let header = match lines.next() {
            Some(line) => line?,
            None => return Err(parse_err(1, "missing header")),
        };
        let vocab_size: usize = header
            .strip_prefix(HEADER_PREFIX)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| parse_err(1, format!("expected `{HEADER_PREFIX}<V>`, found `{header}`")))?;

        let mut entries = Vec::new();
        for (idx, line) in lines.enumerate() {
            let lineno = idx + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(' ');
            let hits: u32 = fields
                .next()
                .and_then(|h| h.parse().ok())
                .ok_or_else(|| parse_err(lineno, "expected a hit count"))?;
            let tokens = fields
                .map(|f| f.parse::<Token>().map_err(|_| parse_err(lineno, format!("bad token `{f}`"))))
                .collect::<Result<Vec<_>>>()?;
            if tokens.len() < 2 || tokens.len() > max_phrase_len {
                return Err(parse_err(lineno, format!("phrase length {} outside [2, {max_phrase_len}]", tokens.len())));
            }
            if let Some(t) = tokens.iter().find(|&&t| t as usize >= vocab_size) {
                return Err(parse_err(lineno, format!("token {t} outside vocabulary of {vocab_size}")));
            }
            entries.push((lineno, hits, tokens));
        }

        let mut pool = PhrasePool::new(capacity_per_key, max_phrase_len);
        let n = entries.len() as u64;
        for (i, (lineno, hits, tokens)) in entries.into_iter().enumerate() {
            let bucket = pool.buckets.entry(tokens[0]).or_default();
            if bucket.iter().any(|p| p.tokens == tokens) {
                return Err(parse_err(lineno, "duplicate phrase"));
            }
            if bucket.len() >= capacity_per_key {
                return Err(parse_err(lineno, format!("bucket {} exceeds capacity {capacity_per_key}", tokens[0])));
            }
            // earlier lines are more recent, which reproduces the saved order
            bucket.push(Phrase { tokens, hits, last_used: n - i as u64 });
        }
        for bucket in pool.buckets.values_mut() {
            sort_bucket(bucket);
        }
        pool.clock = n;
        Ok((pool, vocab_size))
    }
}

fn sort_bucket(bucket: &mut [Phrase]) {
    bucket.sort_by_key(|p| std::cmp::Reverse(p.priority()));
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::PoolParse { line, message: message.into() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(pool: &PhrasePool, key: Token) -> Vec<Vec<Token>> {
        pool.bucket(key).iter().map(|p| p.tokens.clone()).collect()
    }

    #[test]
    fn insert_creates_bucket() {
        let mut pool = PhrasePool::default();
        assert_eq!(pool.insert(Phrase::new(vec![6, 7, 8, 9])).unwrap(), InsertOutcome::Inserted);
        assert_eq!(toks(&pool, 6), vec![vec![6, 7, 8, 9]]);
    }

    #[test]
    fn duplicate_insert_bumps_hits() {
        let mut pool = PhrasePool::default();
        pool.insert(Phrase::new(vec![6, 7, 8, 9])).unwrap();
        assert_eq!(pool.insert(Phrase::new(vec![6, 7, 8, 9])).unwrap(), InsertOutcome::Refreshed);
        assert_eq!(pool.bucket(6).len(), 1);
        assert_eq!(pool.bucket(6)[0].hits, 1);
    }

    #[test]
    fn eviction_drops_lowest_hits() {
        let mut pool = PhrasePool::new(2, 8);
        pool.insert(Phrase::with_hits(vec![6, 1], 2)).unwrap();
        pool.insert(Phrase::with_hits(vec![6, 2], 5)).unwrap();
        assert_eq!(pool.insert(Phrase::with_hits(vec![6, 3], 1)).unwrap(), InsertOutcome::Rejected);
        assert_eq!(toks(&pool, 6), vec![vec![6, 2], vec![6, 1]]);

        // equal hits: the older entry goes
        let out = pool.insert(Phrase::with_hits(vec![6, 4], 2)).unwrap();
        assert_eq!(out, InsertOutcome::Evicted(Phrase { tokens: vec![6, 1], hits: 2, last_used: 1 }));
    }

    #[test]
    fn length_bounds() {
        let mut pool = PhrasePool::new(4, 4);
        assert!(matches!(pool.insert(Phrase::new(vec![1])), Err(Error::PhraseLength { len: 1, .. })));
        assert!(pool.insert(Phrase::new(vec![1, 2, 3, 4, 5])).is_err());
    }

    #[test]
    fn lookup_orders_by_hits_then_recency() {
        let mut pool = PhrasePool::default();
        pool.insert(Phrase::with_hits(vec![6, 2, 3], 1)).unwrap();
        pool.insert(Phrase::with_hits(vec![6, 7, 8, 9], 3)).unwrap();
        let got = pool.lookup_k(6, 3);
        assert_eq!(got.iter().map(|p| p.tokens.clone()).collect::<Vec<_>>(), vec![vec![6, 7, 8, 9], vec![6, 2, 3]]);
        assert!(pool.lookup_k(6, 0).is_empty());
        assert!(pool.lookup_k(5, 3).is_empty());

        pool.insert(Phrase::with_hits(vec![6, 5], 1)).unwrap();
        // (6,5) is newer than (6,2,3) until a lookup refreshes the latter
        assert_eq!(toks(&pool, 6)[1], vec![6, 5]);
        let top2 = pool.lookup_k(6, 2);
        assert_eq!(top2[1].tokens, vec![6, 5]);
    }

    #[test]
    fn replace_corrected_cases() {
        let mut pool = PhrasePool::default();
        pool.insert(Phrase::with_hits(vec![6, 7, 1, 9], 4)).unwrap();
        assert_eq!(pool.replace_corrected(&[6, 7, 1, 9], &[6, 7, 8, 9]).unwrap(), ReplaceOutcome::Replaced);
        assert_eq!(toks(&pool, 6), vec![vec![6, 7, 8, 9]]);
        assert_eq!(pool.bucket(6)[0].hits, 4);

        pool.insert(Phrase::with_hits(vec![6, 2, 3], 3)).unwrap();
        assert_eq!(pool.replace_corrected(&[6, 2, 3], &[6, 7, 8, 9]).unwrap(), ReplaceOutcome::Merged);
        assert_eq!(pool.bucket(6).len(), 1);
        assert_eq!(pool.bucket(6)[0].hits, 7);

        let before = pool.clone();
        assert_eq!(pool.replace_corrected(&[6, 0, 0], &[6, 1, 1]).unwrap(), ReplaceOutcome::Missing);
        assert_eq!(pool, before);
        assert!(pool.replace_corrected(&[6, 7, 8, 9], &[5, 7]).is_err());
    }

    #[test]
    fn replace_with_identical_phrase_keeps_hits() {
        let mut pool = PhrasePool::default();
        pool.insert(Phrase::with_hits(vec![6, 7, 8], 2)).unwrap();
        assert_eq!(pool.replace_corrected(&[6, 7, 8], &[6, 7, 8]).unwrap(), ReplaceOutcome::Replaced);
        assert_eq!(pool.bucket(6)[0].hits, 2);
    }

    #[test]
    fn loads_hand_written_file() {
        let text = "ouroboros-pool v1 vocab=10\n3 6 7 8 9\n1 6 2 3\n";
        let (pool, vocab) = PhrasePool::load(text.as_bytes(), 16, 8).unwrap();
        assert_eq!(vocab, 10);
        assert_eq!(pool.len(), 2);
        assert_eq!(toks(&pool, 6), vec![vec![6, 7, 8, 9], vec![6, 2, 3]]);
        assert_eq!(pool.bucket(6)[0].hits, 3);
    }

    #[test]
    fn malformed_files_name_the_line() {
        let cases = [
            ("ouroboros-pool v2 vocab=10\n", 1),
            ("ouroboros-pool v1 vocab=10\n1 2 3\nx 1 2\n", 3),
            ("ouroboros-pool v1 vocab=10\n1 2\n", 2),
            ("ouroboros-pool v1 vocab=10\n1 2 11\n", 2),
            ("ouroboros-pool v1 vocab=10\n1 2 3\n0 2 3\n", 3),
            ("", 1),
        ];
        for (text, line) in cases {
            match PhrasePool::load(text.as_bytes(), 16, 8) {
                Err(Error::PoolParse { line: got, .. }) => assert_eq!(got, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn empty_pool_roundtrip() {
        let pool = PhrasePool::default();
        let mut buf = Vec::new();
        pool.save(&mut buf, 5).unwrap();
        assert_eq!(buf, b"ouroboros-pool v1 vocab=5\n");
        let (back, _) = PhrasePool::load(buf.as_slice(), 16, 8).unwrap();
        assert_eq!(back, pool);
    }
}
