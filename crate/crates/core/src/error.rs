use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("conversion has zero success probability")]
    ZeroSuccessProbability,

    #[error("numerical integration failed: {0}")]
    Integration(String),

    #[error("optimizer did not converge after {iterations} iterations (last increment {last_increment:e})")]
    NonConvergence { iterations: usize, last_increment: f64 },

    #[error("all coincidence counts are zero")]
    AllZeroCounts,

    #[error("design matrix is rank deficient (rank {rank} of {expected})")]
    RankDeficient { rank: usize, expected: usize },

    #[error("missing measurement setting: {0}")]
    MissingSetting(String),

    #[error("{failed} of {total} Monte-Carlo resamples failed")]
    MonteCarlo { failed: usize, total: usize },

    #[error("unknown reconstructor `{0}`")]
    UnknownStrategy(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
