//! Corpus ingestion: one prompt per line, optionally tagged `task:<id>|`.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ouroboros::Token;

use crate::error::{BenchError, Result};

/// Longest accepted line, in tokens.
pub const MAX_LINE_TOKENS: usize = 4096;

pub const BYTE_EOS: Token = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tokenizer {
    /// One token per byte; id 256 is EOS.
    Byte,
    /// Space-separated words, ids by first occurrence; EOS follows the last word id.
    Whitespace,
}

impl FromStr for Tokenizer {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "byte" => Ok(Tokenizer::Byte),
            "whitespace" => Ok(Tokenizer::Whitespace),
            other => Err(BenchError::Config(format!("unknown tokenizer `{other}` (byte | whitespace)"))),
        }
    }
}

impl fmt::Display for Tokenizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tokenizer::Byte => "byte",
            Tokenizer::Whitespace => "whitespace",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub task: Option<String>,
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub entries: Vec<Entry>,
    pub vocab_size: usize,
    pub eos: Token,
    /// Word list for the whitespace tokenizer, indexed by id.
    pub words: Vec<String>,
}

impl Corpus {
    pub fn sequences(&self) -> Vec<Vec<Token>> {
        self.entries.iter().map(|e| e.tokens.clone()).collect()
    }

    /// All entries joined with EOS, the training stream for n-gram models.
    pub fn training_stream(&self) -> Vec<Token> {
        let mut stream = Vec::new();
        for entry in &self.entries {
            stream.extend_from_slice(&entry.tokens);
            stream.push(self.eos);
        }
        stream
    }

    pub fn is_tagged(&self) -> bool {
        self.entries.iter().all(|e| e.task.is_some())
    }

    pub fn decode(&self, tokens: &[Token]) -> String {
        if self.words.is_empty() {
            let bytes: Vec<u8> = tokens.iter().filter(|&&t| t < 256).map(|&t| t as u8).collect();
            String::from_utf8_lossy(&bytes).into_owned()
        } else {
            tokens
                .iter()
                .map(|&t| self.words.get(t as usize).map(String::as_str).unwrap_or("<eos>"))
                .collect::<Vec<_>>()
                .join(" ")
        }
    }
}

/// Reads and tokenizes a corpus file.
pub fn ingest_corpus(path: &Path, tokenizer: Tokenizer) -> Result<Corpus> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| BenchError::Input(format!("cannot read corpus {}: {e}", path.display())))?;
    parse_corpus(&text, tokenizer)
}

/// Tokenizes corpus text. Blank lines are skipped.
pub fn parse_corpus(text: &str, tokenizer: Tokenizer) -> Result<Corpus> {
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let (task, body) = split_tag(line, idx + 1)?;
        lines.push((idx + 1, task, body));
    }
    if lines.is_empty() {
        return Err(BenchError::Input("corpus is empty".into()));
    }

    let mut entries = Vec::with_capacity(lines.len());
    let mut words = Vec::new();
    let (vocab_size, eos) = match tokenizer {
        Tokenizer::Byte => {
            for (lineno, task, body) in lines {
                let tokens: Vec<Token> = body.bytes().map(Token::from).collect();
                check_len(tokens.len(), lineno)?;
                entries.push(Entry { task, tokens });
            }
            (257, BYTE_EOS)
        }
        Tokenizer::Whitespace => {
            let mut ids: HashMap<&str, Token> = HashMap::new();
            for (lineno, task, body) in &lines {
                let tokens: Vec<Token> = body
                    .split_whitespace()
                    .map(|w| {
                        *ids.entry(w).or_insert_with(|| {
                            words.push(w.to_string());
                            (words.len() - 1) as Token
                        })
                    })
                    .collect();
                check_len(tokens.len(), *lineno)?;
                if tokens.is_empty() {
                    return Err(BenchError::Input(format!("line {lineno}: no tokens after the task tag")));
                }
                entries.push(Entry { task: task.clone(), tokens });
            }
            (words.len() + 1, words.len() as Token)
        }
    };
    Ok(Corpus { entries, vocab_size, eos, words })
}

fn check_len(len: usize, lineno: usize) -> Result<()> {
    if len > MAX_LINE_TOKENS {
        return Err(BenchError::Input(format!("line {lineno}: {len} tokens exceeds the limit of {MAX_LINE_TOKENS}")));
    }
    Ok(())
}

fn split_tag(line: &str, lineno: usize) -> Result<(Option<String>, &str)> {
    let Some(rest) = line.strip_prefix("task:") else {
        return Ok((None, line));
    };
    match rest.split_once('|') {
        Some((id, body)) if !id.trim().is_empty() => Ok((Some(id.trim().to_string()), body)),
        _ => Err(BenchError::Input(format!("line {lineno}: malformed task tag, expected `task:<id>|`"))),
    }
}
