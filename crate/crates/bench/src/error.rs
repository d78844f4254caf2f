use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: memsvm::Error,
    },

    #[error("{stage}: solver did not converge for {what}")]
    Convergence { stage: &'static str, what: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Output { path: PathBuf, msg: String },

    #[error("decision regions need a 2-feature model, this one has {0}")]
    UnsupportedDimension(usize),
}

impl BenchError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: config, data and convergence failures are
    /// distinguishable by scripts.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => EXIT_CONFIG,
            BenchError::Convergence { .. } => EXIT_CONVERGENCE,
            BenchError::UnsupportedDimension(_) => EXIT_DATA,
            BenchError::Stage { source, .. } => match source {
                memsvm::Error::Param(_) | memsvm::Error::Config(_) => EXIT_CONFIG,
                memsvm::Error::Io { .. } => EXIT_OTHER,
                _ => EXIT_DATA,
            },
            BenchError::Io { .. } | BenchError::Output { .. } => EXIT_OTHER,
        }
    }
}

/// Attaches a pipeline stage name to core errors.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for memsvm::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|source| BenchError::Stage { stage, source })
    }
}
