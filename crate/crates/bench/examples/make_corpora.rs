//! Writes the synthetic corpora into a directory (default `data`).

use ouroboros_bench::synthetic::{locality_corpus, reference_corpus, repetitive_corpus};

fn main() -> std::io::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data".into());
    std::fs::create_dir_all(&dir)?;
    std::fs::write(format!("{dir}/reference.txt"), reference_corpus(24, 0))?;
    std::fs::write(format!("{dir}/locality.txt"), locality_corpus(4, 20, 0))?;
    std::fs::write(format!("{dir}/repetitive.txt"), repetitive_corpus(12))?;
    Ok(())
}
