use std::path::PathBuf;

use thiserror::Error;

use crate::param_space::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),

    #[error("chromosome violates the parameter space: {}", format_violations(.0))]
    InvalidChromosome(Vec<Violation>),

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),

    #[error("invalid GA config: {0}")]
    InvalidGaConfig(String),

    #[error("no observed entry aligns with the simulated series ({gaps} coverage gaps)")]
    EmptyAlignment { gaps: usize },

    #[error("fitness undefined: all {0} aligned pairs have an observed value of zero")]
    AllObservedZero(usize),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("correlation undefined: {0} is constant")]
    ConstantVector(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("regression needs more than {needed} rows, got {rows}")]
    TooFewRows { rows: usize, needed: usize },

    #[error("design matrix is rank deficient; collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), message: message.into() }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
