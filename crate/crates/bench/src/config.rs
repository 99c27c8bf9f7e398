//! Benchmark configuration.
//!
//! Config files are UTF-8 `key = value` lines; `#` starts a comment. Keys are
//! the CLI flag names without the leading dashes (`max-new = 64`), and
//! underscores are accepted in place of hyphens. CLI flags are applied after
//! the file, so they win.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ouroboros::engines::{CostModel, EngineConfig};
use ouroboros::models::ModelSpec;

use crate::corpus::Tokenizer;
use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EngineKind {
    Vanilla,
    Speculative,
    Lookahead,
    Ouroboros,
}

impl EngineKind {
    pub const ALL: [EngineKind; 4] = [EngineKind::Vanilla, EngineKind::Speculative, EngineKind::Lookahead, EngineKind::Ouroboros];

    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Vanilla => "vanilla",
            EngineKind::Speculative => "speculative",
            EngineKind::Lookahead => "lookahead",
            EngineKind::Ouroboros => "ouroboros",
        }
    }
}

impl FromStr for EngineKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        EngineKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| BenchError::Config(format!("unknown engine `{s}`")))
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Entry ordering for the locality experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    /// Blocks of this many consecutive entries per task.
    Consecutive(usize),
    Shuffle,
}

impl FromStr for Ordering {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "shuffle" => Ok(Ordering::Shuffle),
            n => match n.parse::<usize>() {
                Ok(cn) if cn >= 1 => Ok(Ordering::Consecutive(cn)),
                _ => Err(BenchError::Config(format!("cn must be a positive integer or `shuffle`, got `{s}`"))),
            },
        }
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ordering::Consecutive(cn) => write!(f, "cn={cn}"),
            Ordering::Shuffle => f.write_str("shuffle"),
        }
    }
}

/// Draft/target homogeneity class used to pick hyperparameter ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskType {
    High,
    Low,
}

impl FromStr for TaskType {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "HH" => Ok(TaskType::High),
            "LH" => Ok(TaskType::Low),
            _ => Err(BenchError::Config(format!("task type must be HH or LH, got `{s}`"))),
        }
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskType::High => "HH",
            TaskType::Low => "LH",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub target_spec: ModelSpec,
    pub draft_spec: ModelSpec,
    pub corpus: Option<PathBuf>,
    pub tokenizer: Tokenizer,
    pub engines: Vec<EngineKind>,
    pub engine: EngineConfig,
    pub cost: CostModel,
    pub repetitions: usize,
    /// Leading tokens of each entry used as the prompt.
    pub prompt_tokens: usize,
    pub pool_file: Option<PathBuf>,
    pub out_csv: Option<PathBuf>,
    pub out_json: Option<PathBuf>,
    pub cn: Vec<Ordering>,
    pub task: TaskType,
    /// Largest K for the ablation K-sweep; `None` runs the component ablation.
    pub k_sweep: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            target_spec: ModelSpec::NGram { order: 3 },
            draft_spec: ModelSpec::Perturbed {
                epsilon: 0.1,
                seed: 1,
                swap: 0,
                base: Box::new(ModelSpec::NGram { order: 3 }),
            },
            corpus: None,
            tokenizer: Tokenizer::Whitespace,
            engines: EngineKind::ALL.to_vec(),
            engine: EngineConfig::default(),
            cost: CostModel::default(),
            repetitions: 1,
            prompt_tokens: 8,
            pool_file: None,
            out_csv: None,
            out_json: None,
            cn: vec![Ordering::Consecutive(20), Ordering::Shuffle],
            task: TaskType::Low,
            k_sweep: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| BenchError::Config(format!("invalid value for {key}: `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(BenchError::Config(format!("invalid boolean for {key}: `{value}`"))),
    }
}

fn optional_path(value: &str) -> Option<PathBuf> {
    let v = value.trim();
    (!v.is_empty()).then(|| PathBuf::from(v))
}

impl BenchConfig {
    /// Sets one key. Keys match the CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let k = key.as_str();
        let e = &mut self.engine;
        match k {
            "target-spec" => self.target_spec = value.parse()?,
            "draft-spec" => self.draft_spec = value.parse()?,
            "corpus" => self.corpus = optional_path(value),
            "tokenizer" => self.tokenizer = value.parse()?,
            "engines" => {
                self.engines = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?;
                if self.engines.is_empty() {
                    return Err(BenchError::Config("engines list is empty".into()));
                }
            }
            "gamma" => e.gamma = parse(k, value)?,
            "beta" => e.beta = parse(k, value)?,
            "k" => e.k = parse(k, value)?,
            "window" => e.window = parse(k, value)?,
            "ngram" => e.ngram = parse(k, value)?,
            "max-new" => e.max_new = parse(k, value)?,
            "temperature" => e.temperature = parse(k, value)?,
            "seed" => e.seed = parse(k, value)?,
            "min-run" => e.min_run = parse(k, value)?,
            "prompt-warmup" => e.prompt_warmup = parse_bool(k, value)?,
            "lengthening" => e.toggles.lengthening = parse_bool(k, value)?,
            "harvest" => e.toggles.harvest = parse_bool(k, value)?,
            "reuse" => e.toggles.reuse = parse_bool(k, value)?,
            "phrase-draft" => e.toggles.phrase_draft = parse_bool(k, value)?,
            "t-draft" => self.cost.t_draft = parse(k, value)?,
            "t-target" => self.cost.t_target = parse(k, value)?,
            "tree-surcharge" => self.cost.tree_surcharge_per_token = parse(k, value)?,
            "repetitions" => self.repetitions = parse(k, value)?,
            "prompt-tokens" => self.prompt_tokens = parse(k, value)?,
            "pool-file" => self.pool_file = optional_path(value),
            "out-csv" => self.out_csv = optional_path(value),
            "out-json" => self.out_json = optional_path(value),
            "cn" => {
                self.cn = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?;
            }
            "task" => self.task = value.parse()?,
            "k-sweep" => {
                self.k_sweep = match value.trim() {
                    "" => None,
                    v => Some(parse(k, v)?),
                }
            }
            _ => return Err(BenchError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a config file's text. Errors carry the line number.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| BenchError::Config(format!("line {}: expected `key = value`", idx + 1)))?;
            self.set(key, value).map_err(|err| BenchError::Config(format!("line {}: {err}", idx + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.engine.validate()?;
        if self.repetitions == 0 {
            return Err(BenchError::Config("repetitions must be at least 1".into()));
        }
        if self.prompt_tokens == 0 {
            return Err(BenchError::Config("prompt-tokens must be at least 1".into()));
        }
        if !(self.cost.t_draft > 0.0 && self.cost.t_target > 0.0) {
            return Err(BenchError::Config("t-draft and t-target must be positive".into()));
        }
        if self.cost.tree_surcharge_per_token.is_nan() || self.cost.tree_surcharge_per_token < 0.0 {
            return Err(BenchError::Config("tree-surcharge must be non-negative".into()));
        }
        if let Some(path) = &self.corpus {
            if !path.exists() {
                return Err(BenchError::Config(format!("corpus {} does not exist", path.display())));
            }
        }
        Ok(())
    }

    /// Every setting as `key = value` pairs, in key order.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let e = &self.engine;
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let join = |items: Vec<String>| items.join(",");
        [
            ("target-spec", self.target_spec.to_string()),
            ("draft-spec", self.draft_spec.to_string()),
            ("corpus", path(&self.corpus)),
            ("tokenizer", self.tokenizer.to_string()),
            ("engines", join(self.engines.iter().map(|k| k.to_string()).collect())),
            ("gamma", e.gamma.to_string()),
            ("beta", e.beta.to_string()),
            ("k", e.k.to_string()),
            ("window", e.window.to_string()),
            ("ngram", e.ngram.to_string()),
            ("max-new", e.max_new.to_string()),
            ("temperature", e.temperature.to_string()),
            ("seed", e.seed.to_string()),
            ("min-run", e.min_run.to_string()),
            ("prompt-warmup", e.prompt_warmup.to_string()),
            ("lengthening", e.toggles.lengthening.to_string()),
            ("harvest", e.toggles.harvest.to_string()),
            ("reuse", e.toggles.reuse.to_string()),
            ("phrase-draft", e.toggles.phrase_draft.to_string()),
            ("t-draft", self.cost.t_draft.to_string()),
            ("t-target", self.cost.t_target.to_string()),
            ("tree-surcharge", self.cost.tree_surcharge_per_token.to_string()),
            ("repetitions", self.repetitions.to_string()),
            ("prompt-tokens", self.prompt_tokens.to_string()),
            ("pool-file", path(&self.pool_file)),
            ("out-csv", path(&self.out_csv)),
            ("out-json", path(&self.out_json)),
            ("cn", join(self.cn.iter().map(|o| o.to_string().trim_start_matches("cn=").to_string()).collect())),
            ("task", self.task.to_string()),
            ("k-sweep", self.k_sweep.map(|k| k.to_string()).unwrap_or_default()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}
