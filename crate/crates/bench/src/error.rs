use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Config(String),

    #[error("missing checkpoint: {0}")]
    MissingCheckpoint(String),

    #[error("config mismatch: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Core(#[from] am2r_core::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BenchError {
    /// Stable identifier used in the machine-readable error line.
    pub fn kind(&self) -> &'static str {
        match self {
            BenchError::Config(_) => "config",
            BenchError::MissingCheckpoint(_) => "missing_checkpoint",
            BenchError::Mismatch(_) => "config_mismatch",
            BenchError::Core(_) => "numerical",
            BenchError::Csv(_) => "csv",
            BenchError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) | BenchError::Mismatch(_) => 2,
            BenchError::MissingCheckpoint(_) | BenchError::Io(_) | BenchError::Csv(_) => 3,
            BenchError::Core(_) => 4,
        }
    }

    /// `error kind=<kind> message="<escaped>"`.
    pub fn machine_line(&self) -> String {
        let msg = self.to_string().replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n");
        format!("error kind={} message=\"{}\"", self.kind(), msg)
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
