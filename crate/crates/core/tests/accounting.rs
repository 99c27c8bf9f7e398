mod common;

use ouroboros::drafting::generate_draft_tokenwise;
use ouroboros::engines::{generate_ouroboros, generate_speculative, generate_vanilla};
use ouroboros::verification::verify;
use ouroboros::Scorer;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_counters(corpus in common::corpus(10), cfg in common::engine_config(), eps in 0.0f64..0.3) {
        let (target, draft) = common::models(&corpus, 10, 3, eps, 5);
        let prompt = &corpus[..3];
        let vanilla = generate_vanilla(&target, prompt, &cfg).unwrap();
        prop_assert_eq!(vanilla.metrics.target_forwards, vanilla.tokens.len() as u64);

        let spec = generate_speculative(&target, &draft, prompt, &cfg).unwrap();
        prop_assert_eq!(spec.metrics.target_forwards, spec.metrics.iterations);
        prop_assert_eq!(spec.metrics.draft_forwards, spec.metrics.draft_tokens);

        let mut pool = cfg.new_pool();
        let ouro = generate_ouroboros(&target, &draft, prompt, &cfg, &mut pool).unwrap();
        let m = &ouro.metrics;
        prop_assert_eq!(m.target_forwards, m.iterations);
        prop_assert!(m.draft_forwards <= m.draft_tokens);
        prop_assert!(m.match_sum >= m.accept_sum);
        prop_assert_eq!(m.accept_len_histogram.iter().sum::<u64>(), m.iterations);
    }

    #[test]
    fn longer_greedy_drafts_never_accept_less(
        corpus in common::corpus(10),
        eps in 0.0f64..0.5,
        seed in any::<u64>(),
        gamma in 1usize..12,
        start in 0usize..15,
    ) {
        let (target, draft) = common::models(&corpus, 10, 3, eps, seed);
        let prefix = &corpus[start..start + 3];
        let accept = |g: usize| {
            let mut ds = Scorer::new(&draft);
            let d = generate_draft_tokenwise(&mut ds, prefix, g).unwrap();
            let mut ts = Scorer::new(&target);
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let outcome = verify(&mut ts, prefix, &d.tokens, &[], 6, 0.0, &mut rng).unwrap();
            prop_assert!(outcome.match_count >= outcome.accept_len);
            Ok(outcome.accept_len)
        };
        prop_assert!(accept(gamma + 1)? >= accept(gamma)?);
    }
}
