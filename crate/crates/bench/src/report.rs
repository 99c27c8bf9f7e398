//! Benchmark reports: one row per (entry, engine, repetition), plus
//! per-engine aggregates. CSV holds the rows; JSON holds rows, aggregates and
//! a config echo.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use ouroboros::engines::{modeled_speedup, CostModel, RunMetrics};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const CSV_COLUMNS: [&str; 12] = [
    "entry", "engine", "tokens", "target_fwd", "draft_fwd", "iters", "mean_A", "mean_match", "c", "eta", "modeled_speedup", "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub entry: usize,
    pub engine: String,
    pub tokens: u64,
    pub target_fwd: u64,
    pub draft_fwd: u64,
    pub iters: u64,
    #[serde(rename = "mean_A")]
    pub mean_a: f64,
    pub mean_match: f64,
    pub c: f64,
    pub eta: f64,
    pub modeled_speedup: f64,
    pub seed: u64,
}

/// A finished run, before it is flattened into a [`Row`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub entry: usize,
    pub engine: String,
    pub seed: u64,
    pub metrics: RunMetrics,
    pub output: Vec<ouroboros::Token>,
}

impl RunRecord {
    pub fn row(&self, cost: &CostModel) -> Row {
        let m = &self.metrics;
        Row {
            entry: self.entry,
            engine: self.engine.clone(),
            tokens: m.tokens_emitted,
            target_fwd: m.target_forwards,
            draft_fwd: m.draft_forwards,
            iters: m.iterations,
            mean_a: m.mean_accept(),
            mean_match: m.mean_match(),
            c: m.draft_reduction(),
            eta: m.block_efficiency(),
            modeled_speedup: modeled_speedup(m, cost).unwrap_or(0.0),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub engine: String,
    pub runs: usize,
    pub tokens: u64,
    pub target_fwd: u64,
    pub draft_fwd: u64,
    pub draft_tokens: u64,
    pub eta_mean: f64,
    pub eta_std: f64,
    pub speedup_mean: f64,
    pub speedup_std: f64,
    pub mean_a: f64,
    pub mean_match: f64,
    /// Pooled draft tokens per draft forward.
    pub c: f64,
    /// Pooled generated tokens per target forward.
    pub tokens_per_target_fwd: f64,
    /// Pooled generated tokens per draft forward.
    pub tokens_per_draft_fwd: f64,
    /// Summed modeled time under the report's cost model.
    pub modeled_time: f64,
}

impl Aggregate {
    pub fn from_records<'a>(engine: &str, records: impl IntoIterator<Item = &'a RunRecord>, cost: &CostModel) -> Self {
        let records: Vec<&RunRecord> = records.into_iter().collect();
        let mut total = RunMetrics::default();
        for r in &records {
            total.absorb(&r.metrics);
        }
        let etas: Vec<f64> = records.iter().map(|r| r.metrics.block_efficiency()).collect();
        let speedups: Vec<f64> = records.iter().map(|r| modeled_speedup(&r.metrics, cost).unwrap_or(0.0)).collect();
        let (eta_mean, eta_std) = mean_std(&etas);
        let (speedup_mean, speedup_std) = mean_std(&speedups);
        let per = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        Aggregate {
            engine: engine.to_string(),
            runs: records.len(),
            tokens: total.tokens_emitted,
            target_fwd: total.target_forwards,
            draft_fwd: total.draft_forwards,
            draft_tokens: total.draft_tokens,
            eta_mean,
            eta_std,
            speedup_mean,
            speedup_std,
            mean_a: total.mean_accept(),
            mean_match: total.mean_match(),
            c: total.draft_reduction(),
            tokens_per_target_fwd: per(total.tokens_emitted, total.target_forwards),
            tokens_per_draft_fwd: per(total.tokens_emitted, total.draft_forwards),
            modeled_time: total.modeled_time(cost),
        }
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub generated_at: u64,
    pub config: BTreeMap<String, String>,
    pub rows: Vec<Row>,
    pub aggregates: Vec<Aggregate>,
}

impl Report {
    /// Builds a report from records; aggregates follow the order in which
    /// engine labels first appear.
    pub fn new(command: &str, config: BTreeMap<String, String>, records: &[RunRecord], cost: &CostModel) -> Self {
        let mut labels: Vec<&str> = Vec::new();
        for r in records {
            if !labels.contains(&r.engine.as_str()) {
                labels.push(&r.engine);
            }
        }
        let aggregates = labels
            .iter()
            .map(|label| Aggregate::from_records(label, records.iter().filter(|r| r.engine == *label), cost))
            .collect();
        Report {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            generated_at: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            config,
            rows: records.iter().map(|r| r.row(cost)).collect(),
            aggregates,
        }
    }

    pub fn aggregate(&self, engine: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.engine == engine)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            writer.serialize(row).map_err(|e| BenchError::Report(e.to_string()))?;
        }
        if self.rows.is_empty() {
            writer.write_record(CSV_COLUMNS).map_err(|e| BenchError::Report(e.to_string()))?;
        }
        let bytes = writer.into_inner().map_err(|e| BenchError::Report(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| BenchError::Report(e.to_string()))
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| BenchError::Report(e.to_string()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json_string()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Writes whichever outputs are configured.
    pub fn write_outputs(&self, csv: Option<&Path>, json: Option<&Path>) -> Result<()> {
        if let Some(path) = csv {
            self.write_csv(path)?;
        }
        if let Some(path) = json {
            self.write_json(path)?;
        }
        Ok(())
    }

    /// Human-readable aggregate table.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "{:<28} {:>5} {:>8} {:>8} {:>8} {:>7} {:>7} {:>7} {:>7} {:>9}\n",
            "engine", "runs", "tokens", "tgt_fwd", "drf_fwd", "eta", "mean_A", "match", "c", "speedup"
        );
        for a in &self.aggregates {
            out.push_str(&format!(
                "{:<28} {:>5} {:>8} {:>8} {:>8} {:>7.3} {:>7.3} {:>7.3} {:>7.3} {:>9.3}\n",
                a.engine, a.runs, a.tokens, a.target_fwd, a.draft_fwd, a.tokens_per_target_fwd, a.mean_a, a.mean_match, a.c, a.speedup_mean
            ));
        }
        out
    }
}
