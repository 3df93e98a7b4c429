use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] sngm_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    ConfigParse { path: PathBuf, message: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("empty budget")]
    EmptyBudget,

    #[error("budget mismatch: {name} has C={c}, expected C={expected}")]
    BudgetMismatch { name: String, c: u64, expected: u64 },

    #[error("momentum norm {norm} exceeds 1/(1-beta) = {bound} at t={t}")]
    MomentumBound { t: u64, norm: f64, bound: f64 },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Invalid(String),
}

impl HarnessError {
    /// Process exit status: 2 for a violated runtime invariant, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::MomentumBound { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
