use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),

    #[error("input: {0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] ouroboros::Error),

    #[error("run failed for entry {entry}, engine {engine}: {message}")]
    RunFailed { entry: usize, engine: String, message: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("report: {0}")]
    Report(String),
}

impl BenchError {
    /// Process exit code: 1 for usage, config and input problems, 2 for
    /// failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) | BenchError::Input(_) | BenchError::Core(_) => 1,
            BenchError::RunFailed { .. } | BenchError::Io(_) | BenchError::Report(_) => 2,
        }
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
