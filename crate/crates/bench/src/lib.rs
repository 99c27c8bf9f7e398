//! Benchmark harness for the `ouroboros` decoders: corpus ingestion, engine
//! matrices, ablations, hyperparameter search, the context-locality
//! experiment and CSV/JSON reports.

pub mod config;
pub mod corpus;
pub mod error;
pub mod locality;
pub mod report;
pub mod runner;
pub mod synthetic;
pub mod tune;

pub use config::{BenchConfig, EngineKind, Ordering, TaskType};
pub use error::{BenchError, Result};
pub use report::Report;
