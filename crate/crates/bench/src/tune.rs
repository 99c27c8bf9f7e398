//! Heuristic hyperparameter search: sample a starting point, then minimize
//! one coordinate at a time (γ, then W, then β) with K held at 3.

use std::collections::HashMap;
use std::ops::RangeInclusive;

use ouroboros::engines::EngineConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{BenchConfig, EngineKind, TaskType};
use crate::error::{BenchError, Result};
use crate::runner::{run_sequence, Workload};

pub const TUNED_K: usize = 3;
pub const WINDOW_RANGE: RangeInclusive<usize> = 15..=20;
pub const BETA_RANGE: RangeInclusive<usize> = 5..=7;

pub fn gamma_range(task: TaskType) -> RangeInclusive<usize> {
    match task {
        TaskType::High => 7..=14,
        TaskType::Low => 2..=6,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub config: EngineConfig,
    pub objective: f64,
    /// Every distinct (γ, W, β) evaluated, in evaluation order.
    pub trace: Vec<((usize, usize, usize), f64)>,
}

#[derive(Clone, Copy)]
enum Coord {
    Gamma,
    Window,
    Beta,
}

fn get(cfg: &EngineConfig, c: Coord) -> usize {
    match c {
        Coord::Gamma => cfg.gamma,
        Coord::Window => cfg.window,
        Coord::Beta => cfg.beta,
    }
}

fn set(cfg: &mut EngineConfig, c: Coord, v: usize) {
    match c {
        Coord::Gamma => cfg.gamma = v,
        Coord::Window => cfg.window = v,
        Coord::Beta => cfg.beta = v,
    }
}

/// Runs the search against an arbitrary objective (lower is better). Within
/// a coordinate the current value is evaluated first and the rest of the
/// range in ascending order; a candidate replaces the incumbent only when
/// strictly better.
pub fn tune_with<F>(base: &EngineConfig, task: TaskType, seed: u64, mut objective: F) -> Result<TuneResult>
where
    F: FnMut(&EngineConfig) -> Result<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = base.clone();
    best.k = TUNED_K;
    best.window = rng.random_range(WINDOW_RANGE);
    best.beta = rng.random_range(BETA_RANGE);
    best.gamma = rng.random_range(gamma_range(task));

    let mut memo: HashMap<(usize, usize, usize), f64> = HashMap::new();
    let mut trace = Vec::new();
    let mut eval = |cfg: &EngineConfig| -> Result<f64> {
        let key = (cfg.gamma, cfg.window, cfg.beta);
        if let Some(&v) = memo.get(&key) {
            return Ok(v);
        }
        let v = objective(cfg)?;
        memo.insert(key, v);
        trace.push((key, v));
        Ok(v)
    };

    let mut best_score = eval(&best)?;
    for (coord, range) in [(Coord::Gamma, gamma_range(task)), (Coord::Window, WINDOW_RANGE), (Coord::Beta, BETA_RANGE)] {
        let start = get(&best, coord);
        for v in range.filter(|&v| v != start) {
            let mut cand = best.clone();
            set(&mut cand, coord, v);
            let score = eval(&cand)?;
            if score < best_score {
                best_score = score;
                best = cand;
            }
        }
    }
    Ok(TuneResult { config: best, objective: best_score, trace })
}

/// Entries used to score candidates: the last quarter of the corpus,
/// rounded up.
pub fn held_out(entries: usize) -> Result<Vec<usize>> {
    if entries == 0 {
        return Err(BenchError::Input("held-out slice is empty".into()));
    }
    let n = entries.div_ceil(4);
    Ok((entries - n..entries).collect())
}

/// Tunes Ouroboros on the workload, scoring each candidate by its summed
/// modeled time over the held-out slice with a fresh pool.
pub fn tune_on(cfg: &BenchConfig, work: &Workload) -> Result<TuneResult> {
    let slice = held_out(work.prompts.len())?;
    tune_with(&cfg.engine, cfg.task, cfg.engine.seed, |candidate| {
        let (records, _) = run_sequence(work, EngineKind::Ouroboros, candidate, "ouroboros", &slice, 0, candidate.new_pool())?;
        Ok(records.iter().map(|r| r.metrics.modeled_time(&cfg.cost)).sum())
    })
}

pub fn tune(cfg: &BenchConfig) -> Result<TuneResult> {
    cfg.validate()?;
    let work = Workload::load(cfg)?;
    tune_on(cfg, &work)
}
