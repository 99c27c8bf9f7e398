use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ouroboros_bench::error::{BenchError, Result};
use ouroboros_bench::{locality, runner, tune, BenchConfig};

#[derive(Parser)]
#[command(name = "ouroboros-bench", version, about = "Benchmarks for phrase-accelerated speculative decoding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every engine over every corpus entry.
    Run(Common),
    /// Search γ, W and β for Ouroboros.
    Tune(Common),
    /// Switch Ouroboros components on one at a time, or sweep K.
    Ablate(Common),
    /// Compare prompt orderings with a persistent pool.
    Locality(Common),
}

#[derive(Args)]
struct Common {
    /// `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    target_spec: Option<String>,
    #[arg(long)]
    draft_spec: Option<String>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// byte | whitespace
    #[arg(long)]
    tokenizer: Option<String>,
    /// Comma-separated: vanilla,speculative,lookahead,ouroboros
    #[arg(long)]
    engines: Option<String>,
    #[arg(long)]
    gamma: Option<usize>,
    #[arg(long)]
    beta: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    ngram: Option<usize>,
    #[arg(long)]
    max_new: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    prompt_tokens: Option<usize>,
    /// Pool loaded before the run (if present) and saved after it.
    #[arg(long)]
    pool_file: Option<PathBuf>,
    #[arg(long)]
    no_lengthening: bool,
    #[arg(long)]
    no_harvest: bool,
    #[arg(long)]
    no_reuse: bool,
    #[arg(long)]
    no_phrase_draft: bool,
    #[arg(long)]
    t_draft: Option<f64>,
    #[arg(long)]
    t_target: Option<f64>,
    /// Modeled cost per tree-verified token.
    #[arg(long)]
    tree_surcharge: Option<f64>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Comma-separated orderings: positive integers or `shuffle`.
    #[arg(long)]
    cn: Option<String>,
    /// HH | LH
    #[arg(long)]
    task: Option<String>,
    /// Sweep K from 0 to this value instead of the component ablation.
    #[arg(long)]
    k_sweep: Option<usize>,
}

impl Common {
    fn into_config(self) -> Result<BenchConfig> {
        let mut cfg = BenchConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let pairs: Vec<(&str, Option<String>)> = vec![
            ("target-spec", self.target_spec),
            ("draft-spec", self.draft_spec),
            ("corpus", path(&self.corpus)),
            ("tokenizer", self.tokenizer),
            ("engines", self.engines),
            ("gamma", self.gamma.map(|v| v.to_string())),
            ("beta", self.beta.map(|v| v.to_string())),
            ("k", self.k.map(|v| v.to_string())),
            ("window", self.window.map(|v| v.to_string())),
            ("ngram", self.ngram.map(|v| v.to_string())),
            ("max-new", self.max_new.map(|v| v.to_string())),
            ("temperature", self.temperature.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("repetitions", self.repetitions.map(|v| v.to_string())),
            ("prompt-tokens", self.prompt_tokens.map(|v| v.to_string())),
            ("pool-file", path(&self.pool_file)),
            ("t-draft", self.t_draft.map(|v| v.to_string())),
            ("t-target", self.t_target.map(|v| v.to_string())),
            ("tree-surcharge", self.tree_surcharge.map(|v| v.to_string())),
            ("out-csv", path(&self.out_csv)),
            ("out-json", path(&self.out_json)),
            ("cn", self.cn),
            ("task", self.task),
            ("k-sweep", self.k_sweep.map(|v| v.to_string())),
            ("lengthening", self.no_lengthening.then(|| "false".into())),
            ("harvest", self.no_harvest.then(|| "false".into())),
            ("reuse", self.no_reuse.then(|| "false".into())),
            ("phrase-draft", self.no_phrase_draft.then(|| "false".into())),
        ];
        for (key, value) in pairs {
            if let Some(value) = value {
                cfg.set(key, &value)?;
            }
        }
        cfg.validate()?;
        if cfg.corpus.is_none() {
            return Err(BenchError::Config("--corpus is required".into()));
        }
        Ok(cfg)
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => {
            let report = runner::run_benchmark(&args.into_config()?)?;
            print!("{}", report.summary());
        }
        Command::Ablate(args) => {
            let report = runner::ablate(&args.into_config()?)?;
            print!("{}", report.summary());
        }
        Command::Locality(args) => {
            let report = locality::locality_experiment(&args.into_config()?)?;
            print!("{}", report.summary());
        }
        Command::Tune(args) => {
            let cfg = args.into_config()?;
            let result = tune::tune(&cfg)?;
            for ((gamma, window, beta), score) in &result.trace {
                println!("gamma={gamma} window={window} beta={beta} modeled_time={score:.4}");
            }
            let c = &result.config;
            println!("best: gamma = {}  window = {}  beta = {}  k = {}  modeled_time = {:.4}", c.gamma, c.window, c.beta, c.k, result.objective);
            if let Some(path) = &cfg.out_json {
                let best = serde_json::json!({
                    "gamma": c.gamma, "window": c.window, "beta": c.beta, "k": c.k,
                    "modeled_time": result.objective, "task": cfg.task.to_string(), "seed": cfg.engine.seed,
                });
                let text = serde_json::to_string_pretty(&best).map_err(|e| BenchError::Report(e.to_string()))?;
                std::fs::write(path, text + "\n")?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
