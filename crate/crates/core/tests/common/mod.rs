#![allow(dead_code)]

use ouroboros::engines::{EngineConfig, Toggles};
use ouroboros::models::{NGramModel, PerturbedModel};
use ouroboros::Token;
use proptest::prelude::*;

/// A random corpus over `vocab` tokens with some repeated stretches, so
/// n-gram models have confident predictions to draft from.
pub fn corpus(vocab: u32) -> impl Strategy<Value = Vec<Token>> {
    (prop::collection::vec(0..vocab, 8..24), prop::collection::vec(0..vocab, 20..120), 1usize..4).prop_map(
        |(motif, noise, reps)| {
            let mut out = Vec::new();
            for chunk in noise.chunks(12) {
                out.extend_from_slice(chunk);
                for _ in 0..reps {
                    out.extend_from_slice(&motif);
                }
            }
            out
        },
    )
}

pub fn models(corpus: &[Token], vocab: usize, order: usize, eps: f64, seed: u64) -> (NGramModel, PerturbedModel) {
    let target = NGramModel::train(corpus, order, vocab).unwrap().with_eos(vocab as Token - 1);
    let base = NGramModel::train(corpus, order, vocab).unwrap().with_eos(vocab as Token - 1);
    let draft = PerturbedModel::new(Box::new(base), eps, seed, 0).unwrap();
    (target, draft)
}

pub fn toggles(bits: u8) -> Toggles {
    Toggles { phrase_draft: bits & 1 != 0, lengthening: bits & 2 != 0, harvest: bits & 4 != 0, reuse: bits & 8 != 0 }
}

pub fn engine_config() -> impl Strategy<Value = EngineConfig> {
    (2usize..=14, 2usize..=7, 0usize..=5, 1usize..=6, 2usize..=4, 1usize..=40, 0u8..16, any::<u64>()).prop_map(
        |(gamma, beta, k, window, ngram, max_new, bits, seed)| EngineConfig {
            gamma,
            beta,
            k,
            window,
            ngram,
            max_new,
            seed,
            toggles: toggles(bits),
            ..EngineConfig::default()
        },
    )
}
