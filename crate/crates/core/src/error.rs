use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid object parameters: {0}")]
    Params(String),

    #[error("integration diverged at t = {t} s")]
    IntegrationDiverged { t: f64 },

    #[error("PID tracker diverged at t = {t} s (error {error} exceeds {limit})")]
    GainFailure { t: f64, error: f64, limit: f64 },

    #[error("observer configuration: {0}")]
    Config(String),

    #[error("non-finite observer input at t = {t} s")]
    NonFiniteInput { t: f64 },

    #[error("degenerate identification window [{t_start}, {t_end}] s: condition number {condition:e}")]
    DegenerateWindow { t_start: f64, t_end: f64, condition: f64 },

    #[error("information matrix lost positive definiteness")]
    Conditioning,

    #[error("schedule: {0}")]
    Schedule(String),

    #[error("misaligned grids: {0}")]
    Alignment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
