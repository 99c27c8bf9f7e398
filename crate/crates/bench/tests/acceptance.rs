//! Acceptance criteria. Each check prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use ouroboros::drafting::generate_draft_tokenwise;
use ouroboros::engines::{
    generate_ouroboros, generate_speculative, generate_vanilla, modeled_speedup, speculative_speedup, CostModel, EngineConfig,
    Toggles,
};
use ouroboros::models::{CounterModel, ModelSpec, NGramModel, PerturbedModel};
use ouroboros::verification::verify;
use ouroboros::{Distribution, LanguageModel, Phrase, PhrasePool, Scorer, Token};
use ouroboros_bench::config::{BenchConfig, EngineKind, Ordering};
use ouroboros_bench::corpus::{parse_corpus, Tokenizer};
use ouroboros_bench::locality::locality_on;
use ouroboros_bench::runner::{ablate_on, run_benchmark_on, Workload};
use ouroboros_bench::synthetic::{locality_corpus, reference_corpus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn reference_config() -> BenchConfig {
    let mut cfg = BenchConfig::default();
    cfg.engine.max_new = 64;
    cfg
}

fn reference_workload(cfg: &BenchConfig) -> Workload {
    let corpus = parse_corpus(&reference_corpus(24, 0), Tokenizer::Whitespace).unwrap();
    Workload::from_corpus(cfg, corpus).unwrap()
}

fn random_corpus(rng: &mut ChaCha8Rng, vocab: u32) -> Vec<Token> {
    let motif: Vec<Token> = (0..rng.random_range(6..16)).map(|_| rng.random_range(0..vocab)).collect();
    let mut out = Vec::new();
    for _ in 0..rng.random_range(3..8) {
        out.extend((0..rng.random_range(2..12)).map(|_| rng.random_range(0..vocab)));
        for _ in 0..rng.random_range(1..4) {
            out.extend_from_slice(&motif);
        }
    }
    out
}

fn random_pair(rng: &mut ChaCha8Rng, vocab: usize, eps: f64) -> (NGramModel, PerturbedModel) {
    let corpus = random_corpus(rng, vocab as u32);
    let order = rng.random_range(2..=4);
    let eos = vocab as Token - 1;
    let target = NGramModel::train(&corpus, order, vocab).unwrap().with_eos(eos);
    let base = NGramModel::train(&corpus, order, vocab).unwrap().with_eos(eos);
    let draft = PerturbedModel::new(Box::new(base), eps, rng.random(), rng.random_range(0..vocab as Token)).unwrap();
    (target, draft)
}

fn losslessness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let cases = 256;
    let mut mismatches = 0;
    for case in 0..cases {
        let vocab = rng.random_range(6..16);
        let eps = [0.0, 0.05, 0.2][case % 3];
        let (target, draft) = random_pair(&mut rng, vocab, eps);
        let bits = case % 16;
        let cfg = EngineConfig {
            gamma: rng.random_range(2..=14),
            beta: rng.random_range(2..=7),
            k: rng.random_range(0..=5),
            window: rng.random_range(1..=8),
            ngram: rng.random_range(2..=4),
            max_new: rng.random_range(1..=48),
            seed: rng.random(),
            toggles: Toggles { phrase_draft: bits & 1 != 0, lengthening: bits & 2 != 0, harvest: bits & 4 != 0, reuse: bits & 8 != 0 },
            ..EngineConfig::default()
        };
        let prompt: Vec<Token> = (0..rng.random_range(1..6)).map(|_| rng.random_range(0..vocab as Token)).collect();
        let vanilla = generate_vanilla(&target, &prompt, &cfg).map_err(|e| e.to_string())?;
        let mut pool = cfg.new_pool();
        let ouro = generate_ouroboros(&target, &draft, &prompt, &cfg, &mut pool).map_err(|e| e.to_string())?;
        if ouro.tokens != vanilla.tokens {
            mismatches += 1;
        }
    }
    let detail = format!("{cases} fuzzed cases, {mismatches} mismatches");
    if mismatches == 0 { Ok(detail) } else { Err(detail) }
}

fn tree_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let instances = 1000;
    let mut failures = 0;
    for _ in 0..instances {
        let vocab = rng.random_range(3..12);
        let corpus = random_corpus(&mut rng, vocab as u32);
        let model = NGramModel::train(&corpus, rng.random_range(1..=4), vocab).unwrap();
        let seq = |rng: &mut ChaCha8Rng, lo: usize| -> Vec<Token> {
            (0..rng.random_range(lo..8)).map(|_| rng.random_range(0..vocab as Token)).collect()
        };
        let prefix = seq(&mut rng, 1);
        let shared = seq(&mut rng, 0);
        let branches: Vec<Vec<Token>> = (0..rng.random_range(1..6)).map(|_| seq(&mut rng, 0)).collect();
        let mut scorer = Scorer::new(&model);
        let rows = scorer.forward_tree(&prefix, &shared, &branches).map_err(|e| e.to_string())?;
        for (row, branch) in rows.iter().zip(&branches) {
            let path = [&shared[..], &branch[..]].concat();
            let expected: Vec<Distribution> = if path.is_empty() {
                vec![Scorer::new(&model).next_distribution(&prefix).unwrap()]
            } else {
                Scorer::new(&model).forward_scan(&prefix, &path).unwrap()
            };
            if *row != expected {
                failures += 1;
            }
        }
        if scorer.forwards() != 1 {
            failures += 1;
        }
    }
    let detail = format!("{instances} instances, {failures} mismatches");
    if failures == 0 { Ok(detail) } else { Err(detail) }
}

fn match_exceeds_accept() -> Check {
    let mut cfg = reference_config();
    cfg.engine.gamma = 20;
    let work = reference_workload(&cfg);

    let mut violations = 0;
    let mut verifications = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for entry in &work.corpus.entries {
        for start in 2..entry.tokens.len() {
            let prefix = &entry.tokens[..start];
            let draft = generate_draft_tokenwise(&mut Scorer::new(work.draft.as_ref()), prefix, 20).unwrap();
            let out = verify(&mut Scorer::new(work.target.as_ref()), prefix, &draft.tokens, &[], 6, 0.0, &mut rng).unwrap();
            verifications += 1;
            if out.match_count < out.accept_len {
                violations += 1;
            }
        }
    }

    cfg.engines = vec![EngineKind::Ouroboros];
    let report = run_benchmark_on(&cfg, &work).map_err(|e| e.to_string())?;
    let agg = report.aggregate("ouroboros").unwrap();
    let detail = format!(
        "{verifications} verifications, {violations} with #Match < A; gamma=20 mean A {:.3}, mean #Match {:.3}",
        agg.mean_a, agg.mean_match
    );
    if violations == 0 && agg.mean_match > agg.mean_a { Ok(detail) } else { Err(detail) }
}

fn block_efficiency_order() -> Check {
    let cfg = reference_config();
    let work = reference_workload(&cfg);
    let report = run_benchmark_on(&cfg, &work).map_err(|e| e.to_string())?;
    let eta = |engine: &str| report.aggregate(engine).unwrap().tokens_per_target_fwd;
    let (o, s, v) = (eta("ouroboros"), eta("speculative"), eta("vanilla"));

    let model = CounterModel::new(50);
    let mut pool = PhrasePool::default();
    pool.insert(Phrase::new(vec![4, 5, 6, 7, 8, 9])).unwrap();
    let seeded = EngineConfig { gamma: 4, beta: 6, k: 1, max_new: 10, prompt_warmup: false, ..EngineConfig::default() };
    let run = generate_ouroboros(&model, &model, &[0], &seeded, &mut pool).map_err(|e| e.to_string())?;
    let seeded_eta = run.metrics.block_efficiency();

    let detail = format!(
        "eta ouroboros {o:.3} >= speculative {s:.3} > vanilla {v:.3}; pre-seeded draft=target eta {seeded_eta:.1} >= gamma+2 = {}",
        seeded.gamma + 2
    );
    if o >= s && s > v && v == 1.0 && seeded_eta >= (seeded.gamma + 2) as f64 { Ok(detail) } else { Err(detail) }
}

fn ablation_direction() -> Check {
    let cfg = reference_config();
    let work = reference_workload(&cfg);
    let report = ablate_on(&cfg, &work).map_err(|e| e.to_string())?;
    let stages: Vec<(String, f64, f64)> =
        report.aggregates.iter().map(|a| (a.engine.clone(), a.tokens_per_target_fwd, a.c)).collect();
    let monotone = stages.windows(2).all(|w| w[1].1 >= w[0].1);
    let strict_c = stages[1].2 > stages[0].2;
    let detail = stages.iter().map(|(n, eta, c)| format!("{n} {eta:.3}/c={c:.3}")).collect::<Vec<_>>().join(", ");
    if monotone && strict_c { Ok(detail) } else { Err(detail) }
}

/// Successor model that is wrong at every fifth generated position.
struct EveryFifthWrong {
    base: CounterModel,
    prompt_len: usize,
}

impl LanguageModel for EveryFifthWrong {
    fn vocab_size(&self) -> usize {
        self.base.vocab_size()
    }

    fn eos(&self) -> Option<Token> {
        None
    }

    fn predict(&self, context: &[Token]) -> Distribution {
        let next = (context.last().unwrap() + 1) % self.vocab_size() as Token;
        if (context.len() - self.prompt_len) % 5 == 4 {
            Distribution::one_hot(self.vocab_size(), (next + 1) % self.vocab_size() as Token)
        } else {
            Distribution::one_hot(self.vocab_size(), next)
        }
    }
}

fn speedup_model() -> Check {
    let target = CounterModel::new(64);
    let draft = EveryFifthWrong { base: CounterModel::new(64), prompt_len: 1 };
    let cfg = EngineConfig { gamma: 5, max_new: 50, ..EngineConfig::default() };
    let run = generate_speculative(&target, &draft, &[0], &cfg).map_err(|e| e.to_string())?;
    let cost = CostModel { t_draft: 0.1, t_target: 1.0, tree_surcharge_per_token: 0.0 };
    let measured = modeled_speedup(&run.metrics, &cost).map_err(|e| e.to_string())?;
    let every_a_is_four = run.metrics.accept_len_histogram.iter().enumerate().all(|(a, &n)| n == 0 || a == 4);
    let closed = speculative_speedup(run.metrics.mean_accept(), 5.0, 0.1, 1.0);
    let detail = format!("A=4 every iteration: {every_a_is_four}; modeled {measured:.12} vs closed form {closed:.12} (10/3)");
    if every_a_is_four && (measured - closed).abs() < 1e-9 && (closed - 10.0 / 3.0).abs() < 1e-9 { Ok(detail) } else { Err(detail) }
}

fn accept_monotone() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let cases = 100;
    let mut violations = 0;
    for _ in 0..cases {
        let vocab = rng.random_range(5..14);
        let eps = rng.random_range(0.0..0.5);
        let (target, draft) = random_pair(&mut rng, vocab, eps);
        let prefix: Vec<Token> = (0..rng.random_range(1..6)).map(|_| rng.random_range(0..vocab as Token)).collect();
        let gamma = rng.random_range(1..14);
        let accept = |g: usize| {
            let d = generate_draft_tokenwise(&mut Scorer::new(&draft), &prefix, g).unwrap();
            let mut r = ChaCha8Rng::seed_from_u64(0);
            verify(&mut Scorer::new(&target), &prefix, &d.tokens, &[], 6, 0.0, &mut r).unwrap().accept_len
        };
        if accept(gamma + 1) < accept(gamma) {
            violations += 1;
        }
    }
    let detail = format!("{cases} fuzzed cases, {violations} violations");
    if violations == 0 { Ok(detail) } else { Err(detail) }
}

fn sampling_validity() -> Check {
    let corpus: Vec<Token> = [[5, 0, 1, 2], [5, 0, 1, 3], [5, 0, 1, 3], [5, 0, 1, 4], [5, 0, 1, 4], [5, 0, 1, 4]].concat();
    let target = NGramModel::train(&corpus, 4, 6).unwrap();
    let draft = PerturbedModel::new(Box::new(NGramModel::train(&corpus, 4, 6).unwrap()), 0.5, 3, 2).unwrap();
    let context = [5, 0, 1];
    let draws = 10_000u64;
    let mut counts = [[0u64; 6]; 2];
    for i in 0..draws {
        let cfg = EngineConfig { max_new: 1, temperature: 1.0, seed: i, ..EngineConfig::default() };
        let mut pool = cfg.new_pool();
        let o = generate_ouroboros(&target, &draft, &context, &cfg, &mut pool).map_err(|e| e.to_string())?;
        counts[0][o.tokens[0] as usize] += 1;
        let v = generate_vanilla(&target, &context, &EngineConfig { seed: i + draws, ..cfg }).map_err(|e| e.to_string())?;
        counts[1][v.tokens[0] as usize] += 1;
    }
    let used: Vec<usize> = (0..6).filter(|&t| counts[0][t] + counts[1][t] > 0).collect();
    let total = 2.0 * draws as f64;
    let mut stat = 0.0;
    for row in &counts {
        let row_total: u64 = row.iter().sum();
        for &t in &used {
            let expected = row_total as f64 * (counts[0][t] + counts[1][t]) as f64 / total;
            stat += (row[t] as f64 - expected).powi(2) / expected;
        }
    }
    let df = (used.len() - 1) as f64;
    let p = 1.0 - ChiSquared::new(df).unwrap().cdf(stat);
    let detail = format!("ouroboros {:?} vs vanilla {:?}; chi2 {stat:.3}, df {df}, p {p:.4}", counts[0], counts[1]);
    if p > 0.01 { Ok(detail) } else { Err(detail) }
}

/// Tree surcharge per verified tree token used for the K-sweep.
const K_SWEEP_SURCHARGE: f64 = 0.02;

fn k_sweep_shape() -> Check {
    let mut cfg = reference_config();
    cfg.k_sweep = Some(8);
    cfg.cost.tree_surcharge_per_token = K_SWEEP_SURCHARGE;
    let work = reference_workload(&cfg);
    let report = ablate_on(&cfg, &work).map_err(|e| e.to_string())?;
    let times: Vec<f64> = report.aggregates.iter().map(|a| a.modeled_time).collect();
    let argmin = times.iter().enumerate().fold(0, |best, (k, &t)| if t < times[best] { k } else { best });
    let detail = format!(
        "surcharge {K_SWEEP_SURCHARGE}: modeled time {}; argmin K={argmin}",
        times.iter().map(|t| format!("{t:.1}")).collect::<Vec<_>>().join(" ")
    );
    if argmin != 0 && argmin != 8 { Ok(detail) } else { Err(detail) }
}

fn locality() -> Check {
    let mut cfg = BenchConfig::default();
    cfg.engine.max_new = 48;
    cfg.target_spec = "ngram:order=4".parse::<ModelSpec>().unwrap();
    cfg.draft_spec = "perturbed:eps=0.1,seed=1,swap=0/ngram:order=4".parse::<ModelSpec>().unwrap();
    cfg.cn = vec![Ordering::Consecutive(20), Ordering::Shuffle];
    let corpus = parse_corpus(&locality_corpus(4, 20, 0), Tokenizer::Whitespace).unwrap();
    let work = Workload::from_corpus(&cfg, corpus).unwrap();
    let report = locality_on(&cfg, &work).map_err(|e| e.to_string())?;
    let tpd = |label: &str| report.aggregate(label).unwrap().tokens_per_draft_fwd;
    let (cn_off, cn_on) = (tpd("ouroboros[cn=20,reuse=off]"), tpd("ouroboros[cn=20,reuse=on]"));
    let (sh_off, sh_on) = (tpd("ouroboros[shuffle,reuse=off]"), tpd("ouroboros[shuffle,reuse=on]"));
    let detail = format!(
        "tokens/draft fwd: cn=20 off {cn_off:.3} on {cn_on:.3}; shuffle off {sh_off:.3} on {sh_on:.3}"
    );
    if cn_on > cn_off && sh_on > sh_off && cn_on >= sh_on { Ok(detail) } else { Err(detail) }
}

fn persistence_and_determinism() -> Check {
    let cfg = reference_config();
    let work = reference_workload(&cfg);
    let mut pool = cfg.engine.new_pool();
    for prompt in &work.prompts {
        generate_ouroboros(work.target.as_ref(), work.draft.as_ref(), prompt, &cfg.engine, &mut pool).map_err(|e| e.to_string())?;
    }
    let mut saved = Vec::new();
    pool.save(&mut saved, work.vocab_size()).map_err(|e| e.to_string())?;
    let (loaded, vocab) = PhrasePool::load(&saved[..], pool.capacity_per_key(), pool.max_phrase_len()).map_err(|e| e.to_string())?;
    let mut resaved = Vec::new();
    loaded.save(&mut resaved, vocab).map_err(|e| e.to_string())?;
    let roundtrip = loaded == pool && resaved == saved && vocab == work.vocab_size();

    let mut sampled = cfg.clone();
    sampled.engine.temperature = 0.8;
    sampled.repetitions = 2;
    let json = || -> Result<String, String> {
        let mut report = run_benchmark_on(&sampled, &work).map_err(|e| e.to_string())?;
        report.generated_at = 0;
        report.to_json_string().map_err(|e| e.to_string())
    };
    let (a, b) = (json()?, json()?);
    let detail = format!("pool of {} phrases round-trips: {roundtrip}; identical reports: {}", pool.len(), a == b);
    if roundtrip && a == b { Ok(detail) } else { Err(detail) }
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("losslessness", losslessness),
        ("tree verification oracle", tree_oracle),
        ("match count vs accept length", match_exceeds_accept),
        ("block efficiency ordering", block_efficiency_order),
        ("ablation direction", ablation_direction),
        ("speedup model", speedup_model),
        ("greedy accept monotonicity", accept_monotone),
        ("sampling validity", sampling_validity),
        ("K-sweep shape", k_sweep_shape),
        ("context locality", locality),
        ("persistence and determinism", persistence_and_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        match check() {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {n:>2} {name}: {detail}");
                failed.push(n);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
