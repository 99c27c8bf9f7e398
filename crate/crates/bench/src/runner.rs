//! Benchmark matrix and ablations.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use ouroboros::engines::{
    generate_lookahead_target, generate_ouroboros, generate_speculative, generate_vanilla, EngineConfig, Generation, Toggles,
};
use ouroboros::models::BuildContext;
use ouroboros::{LanguageModel, PhrasePool, Token};
use rayon::prelude::*;

use crate::config::{BenchConfig, EngineKind};
use crate::corpus::{ingest_corpus, Corpus};
use crate::error::{BenchError, Result};
use crate::report::{Report, RunRecord};

/// A corpus with its prompts and the models built over it.
pub struct Workload {
    pub corpus: Corpus,
    pub prompts: Vec<Vec<Token>>,
    pub target: Box<dyn LanguageModel>,
    pub draft: Box<dyn LanguageModel>,
}

impl Workload {
    pub fn load(cfg: &BenchConfig) -> Result<Self> {
        let path = cfg.corpus.as_ref().ok_or_else(|| BenchError::Config("no corpus given".into()))?;
        Self::from_corpus(cfg, ingest_corpus(path, cfg.tokenizer)?)
    }

    /// Trains both models on the whole corpus and cuts each entry down to
    /// its first `prompt_tokens` tokens.
    pub fn from_corpus(cfg: &BenchConfig, corpus: Corpus) -> Result<Self> {
        let stream = corpus.training_stream();
        let ctx = BuildContext { corpus: &stream, vocab_size: corpus.vocab_size, eos: Some(corpus.eos) };
        let target = cfg.target_spec.build(&ctx)?;
        let draft = cfg.draft_spec.build(&ctx)?;
        if target.vocab_size() != draft.vocab_size() {
            return Err(BenchError::Config(format!(
                "target vocabulary {} differs from draft vocabulary {}",
                target.vocab_size(),
                draft.vocab_size()
            )));
        }
        let prompts = corpus
            .entries
            .iter()
            .map(|e| e.tokens[..e.tokens.len().min(cfg.prompt_tokens)].to_vec())
            .collect();
        Ok(Workload { corpus, prompts, target, draft })
    }

    pub fn vocab_size(&self) -> usize {
        self.target.vocab_size()
    }
}

/// Seed of one run, distinct per entry and repetition.
pub fn run_seed(base: u64, entry: usize, rep: usize) -> u64 {
    base.wrapping_add((rep as u64).wrapping_mul(1_000_003)).wrapping_add(entry as u64)
}

/// Runs one engine over `entries` in order. Ouroboros carries its pool from
/// prompt to prompt when reuse is on and starts each prompt empty otherwise;
/// the returned pool is the final one.
pub fn run_sequence(
    work: &Workload,
    kind: EngineKind,
    cfg: &EngineConfig,
    label: &str,
    entries: &[usize],
    rep: usize,
    mut pool: PhrasePool,
) -> Result<(Vec<RunRecord>, PhrasePool)> {
    let mut records = Vec::with_capacity(entries.len());
    for &entry in entries {
        let seed = run_seed(cfg.seed, entry, rep);
        let run_cfg = EngineConfig { seed, ..cfg.clone() };
        let prompt = &work.prompts[entry];
        if kind == EngineKind::Ouroboros && !cfg.toggles.reuse {
            pool.clear();
        }
        let target = work.target.as_ref();
        let draft = work.draft.as_ref();
        let result = catch_unwind(AssertUnwindSafe(|| -> ouroboros::Result<Generation> {
            match kind {
                EngineKind::Vanilla => generate_vanilla(target, prompt, &run_cfg),
                EngineKind::Speculative => generate_speculative(target, draft, prompt, &run_cfg),
                EngineKind::Lookahead => generate_lookahead_target(target, prompt, &run_cfg),
                EngineKind::Ouroboros => generate_ouroboros(target, draft, prompt, &run_cfg, &mut pool),
            }
        }));
        let generation = match result {
            Ok(Ok(g)) => g,
            Ok(Err(err)) => return Err(err.into()),
            Err(panic) => {
                let message = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                return Err(BenchError::RunFailed { entry, engine: label.to_string(), message });
            }
        };
        records.push(RunRecord { entry, engine: label.to_string(), seed, metrics: generation.metrics, output: generation.tokens });
    }
    Ok((records, pool))
}

pub fn load_pool(path: &Path, cfg: &EngineConfig, vocab_size: usize) -> Result<PhrasePool> {
    let file = File::open(path).map_err(|e| BenchError::Input(format!("cannot read pool {}: {e}", path.display())))?;
    let template = cfg.new_pool();
    let (pool, vocab) = PhrasePool::load(BufReader::new(file), template.capacity_per_key(), template.max_phrase_len())
        .map_err(|e| BenchError::Input(format!("pool {}: {e}", path.display())))?;
    if vocab != vocab_size {
        return Err(BenchError::Input(format!(
            "pool {} was saved for vocabulary {vocab}, the models use {vocab_size}",
            path.display()
        )));
    }
    Ok(pool)
}

pub fn save_pool(path: &Path, pool: &PhrasePool, vocab_size: usize) -> Result<()> {
    let file = File::create(path)?;
    pool.save(BufWriter::new(file), vocab_size)?;
    Ok(())
}

/// Runs every configured engine over every entry and repetition. Rows come
/// out ordered by entry, then engine, then repetition. When a pool file is
/// set, Ouroboros starts from it if it exists and the first repetition's
/// final pool is written back.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Report> {
    cfg.validate()?;
    let work = Workload::load(cfg)?;
    let report = run_benchmark_on(cfg, &work)?;
    report.write_outputs(cfg.out_csv.as_deref(), cfg.out_json.as_deref())?;
    Ok(report)
}

/// [`run_benchmark`] over an already built workload, without writing reports.
pub fn run_benchmark_on(cfg: &BenchConfig, work: &Workload) -> Result<Report> {
    let initial = match &cfg.pool_file {
        Some(path) if path.exists() => load_pool(path, &cfg.engine, work.vocab_size())?,
        _ => cfg.engine.new_pool(),
    };
    let entries: Vec<usize> = (0..work.prompts.len()).collect();
    let groups: Vec<(usize, EngineKind, usize)> = cfg
        .engines
        .iter()
        .enumerate()
        .flat_map(|(i, &kind)| (0..cfg.repetitions).map(move |rep| (i, kind, rep)))
        .collect();
    type GroupResult = Result<(usize, usize, Vec<RunRecord>, PhrasePool)>;
    let results: Vec<GroupResult> = groups
        .par_iter()
        .map(|&(i, kind, rep)| {
            let (records, pool) = run_sequence(work, kind, &cfg.engine, kind.name(), &entries, rep, initial.clone())?;
            Ok((i, rep, records, pool))
        })
        .collect();

    let mut keyed = Vec::new();
    let mut final_pool = None;
    for result in results {
        let (i, rep, records, pool) = result?;
        if cfg.engines[i] == EngineKind::Ouroboros && rep == 0 && final_pool.is_none() {
            final_pool = Some(pool);
        }
        keyed.extend(records.into_iter().map(|r| ((r.entry, i, rep), r)));
    }
    keyed.sort_by_key(|(key, _)| *key);
    let records: Vec<RunRecord> = keyed.into_iter().map(|(_, r)| r).collect();

    if let (Some(path), Some(pool)) = (&cfg.pool_file, &final_pool) {
        save_pool(path, pool, work.vocab_size())?;
    }
    Ok(Report::new("run", cfg.echo(), &records, &cfg.cost))
}

/// Cumulative component stages: all off, then phrase drafting, lengthening,
/// harvesting and cross-prompt reuse switched on in that order.
pub fn ablation_stages() -> Vec<(&'static str, Toggles)> {
    let mut t = Toggles::NONE;
    let mut stages = vec![("none", t)];
    t.phrase_draft = true;
    stages.push(("+phrase_draft", t));
    t.lengthening = true;
    stages.push(("+lengthening", t));
    t.harvest = true;
    stages.push(("+harvest", t));
    t.reuse = true;
    stages.push(("+reuse", t));
    stages
}

/// Ouroboros under each ablation stage, or under `K = 0..=max` when a K-sweep
/// is configured. Each variant runs the entries sequentially.
pub fn ablate(cfg: &BenchConfig) -> Result<Report> {
    cfg.validate()?;
    let work = Workload::load(cfg)?;
    let report = ablate_on(cfg, &work)?;
    report.write_outputs(cfg.out_csv.as_deref(), cfg.out_json.as_deref())?;
    Ok(report)
}

pub fn ablate_on(cfg: &BenchConfig, work: &Workload) -> Result<Report> {
    let variants: Vec<(String, EngineConfig)> = match cfg.k_sweep {
        Some(max) => (0..=max).map(|k| (format!("ouroboros[k={k}]"), EngineConfig { k, ..cfg.engine.clone() })).collect(),
        None => ablation_stages()
            .into_iter()
            .map(|(name, toggles)| (format!("ouroboros[{name}]"), EngineConfig { toggles, ..cfg.engine.clone() }))
            .collect(),
    };
    for (_, engine) in &variants {
        engine.validate()?;
    }
    let entries: Vec<usize> = (0..work.prompts.len()).collect();
    let results: Vec<Result<Vec<RunRecord>>> = variants
        .par_iter()
        .map(|(label, engine)| {
            let mut records = Vec::new();
            for rep in 0..cfg.repetitions {
                let (r, _) = run_sequence(work, EngineKind::Ouroboros, engine, label, &entries, rep, engine.new_pool())?;
                records.extend(r);
            }
            Ok(records)
        })
        .collect();
    let mut records = Vec::new();
    for r in results {
        records.extend(r?);
    }
    Ok(Report::new("ablate", cfg.echo(), &records, &cfg.cost))
}
