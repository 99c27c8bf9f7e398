mod common;

use ouroboros::engines::{
    generate_lookahead_target, generate_ouroboros, generate_speculative, generate_vanilla, EngineConfig,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn greedy_engines_reproduce_vanilla(
        corpus in common::corpus(12),
        order in 2usize..=4,
        eps in prop::sample::select(vec![0.0, 0.05, 0.2]),
        draft_seed in any::<u64>(),
        cfg in common::engine_config(),
        prompt_len in 1usize..6,
        start in 0usize..20,
    ) {
        let (target, draft) = common::models(&corpus, 12, order, eps, draft_seed);
        let start = start % (corpus.len() - prompt_len);
        let prompt = &corpus[start..start + prompt_len];

        let vanilla = generate_vanilla(&target, prompt, &cfg).unwrap();
        let spec = generate_speculative(&target, &draft, prompt, &cfg).unwrap();
        let look = generate_lookahead_target(&target, prompt, &cfg).unwrap();
        let mut pool = cfg.new_pool();
        let ouro = generate_ouroboros(&target, &draft, prompt, &cfg, &mut pool).unwrap();
        prop_assert_eq!(&spec.tokens, &vanilla.tokens);
        prop_assert_eq!(&look.tokens, &vanilla.tokens);
        prop_assert_eq!(&ouro.tokens, &vanilla.tokens);

        // a pool carried over from the previous prompt does not change the output
        let again = generate_ouroboros(&target, &draft, prompt, &EngineConfig { seed: cfg.seed ^ 1, ..cfg.clone() }, &mut pool).unwrap();
        prop_assert_eq!(&again.tokens, &vanilla.tokens);
    }
}
