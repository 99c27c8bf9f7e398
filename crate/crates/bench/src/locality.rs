//! Context locality: how the order of prompts affects a persistent pool.

use ouroboros::engines::EngineConfig;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{BenchConfig, EngineKind, Ordering};
use crate::corpus::Corpus;
use crate::error::{BenchError, Result};
use crate::report::{Report, RunRecord};
use crate::runner::{run_sequence, Workload};

/// Entry indices in run order. `Consecutive(cn)` groups entries by task
/// (tasks in order of first appearance) and cycles through the tasks, taking
/// up to `cn` entries from each in turn. `Shuffle` permutes all entries
/// with the seed.
pub fn order_entries(corpus: &Corpus, ordering: Ordering, seed: u64) -> Result<Vec<usize>> {
    if !corpus.is_tagged() {
        let line = corpus.entries.iter().position(|e| e.task.is_none()).map(|i| i + 1).unwrap_or(0);
        return Err(BenchError::Input(format!("locality needs every entry tagged `task:<id>|`; entry {line} is not")));
    }
    match ordering {
        Ordering::Shuffle => {
            let mut order: Vec<usize> = (0..corpus.entries.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            Ok(order)
        }
        Ordering::Consecutive(cn) => {
            let mut tasks: Vec<(&str, Vec<usize>)> = Vec::new();
            for (i, entry) in corpus.entries.iter().enumerate() {
                let task = entry.task.as_deref().unwrap_or_default();
                match tasks.iter_mut().find(|(t, _)| *t == task) {
                    Some((_, list)) => list.push(i),
                    None => tasks.push((task, vec![i])),
                }
            }
            let mut cursors = vec![0usize; tasks.len()];
            let mut order = Vec::with_capacity(corpus.entries.len());
            while order.len() < corpus.entries.len() {
                for ((_, list), cursor) in tasks.iter().zip(cursors.iter_mut()) {
                    let end = (*cursor + cn).min(list.len());
                    order.extend_from_slice(&list[*cursor..end]);
                    *cursor = end;
                }
            }
            Ok(order)
        }
    }
}

/// Runs Ouroboros sequentially with one pool under each configured ordering,
/// once with reuse off and once with it on. Rows are labelled
/// `ouroboros[<ordering>,reuse=<on|off>]`.
pub fn locality_experiment(cfg: &BenchConfig) -> Result<Report> {
    cfg.validate()?;
    let work = Workload::load(cfg)?;
    let report = locality_on(cfg, &work)?;
    report.write_outputs(cfg.out_csv.as_deref(), cfg.out_json.as_deref())?;
    Ok(report)
}

pub fn locality_on(cfg: &BenchConfig, work: &Workload) -> Result<Report> {
    if cfg.cn.is_empty() {
        return Err(BenchError::Config("no orderings given (cn)".into()));
    }
    let mut records: Vec<RunRecord> = Vec::new();
    for &ordering in &cfg.cn {
        let order = order_entries(&work.corpus, ordering, cfg.engine.seed)?;
        for reuse in [false, true] {
            let mut engine = EngineConfig { ..cfg.engine.clone() };
            engine.toggles.reuse = reuse;
            let label = format!("ouroboros[{ordering},reuse={}]", if reuse { "on" } else { "off" });
            let (r, _) = run_sequence(work, EngineKind::Ouroboros, &engine, &label, &order, 0, engine.new_pool())?;
            records.extend(r);
        }
    }
    Ok(Report::new("locality", cfg.echo(), &records, &cfg.cost))
}
