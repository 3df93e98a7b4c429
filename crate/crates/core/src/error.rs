use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid layer bounds: {0}")]
    InvalidLayerBounds(String),

    #[error("optimizer requires layer_bounds on the parameter vector")]
    MissingLayerBounds,

    #[error("non-finite value encountered at step {step}")]
    NonFinite { step: u64 },

    #[error("momentum norm {norm} exceeds 1/(1-beta) = {bound} at step {step}")]
    MomentumBoundViolated { step: u64, norm: f64, bound: f64 },

    #[error(
        "gradient accumulator overfilled: {have} + {adding} samples exceeds target batch {target}"
    )]
    AccumulatorOverfill {
        have: usize,
        adding: usize,
        target: usize,
    },

    #[error("learning rate requested at t={t} but the schedule ends at T={total}")]
    ScheduleExhausted { t: u64, total: u64 },

    #[error("MSGD bound inapplicable: eta={eta} exceeds (1-beta)^2/((1+beta)L) = {max_eta}")]
    MsgdBoundInapplicable { eta: f64, max_eta: f64 },

    #[error("relaxed-smooth bound inapplicable: eta={eta} exceeds 1/(8 kappa lambda) = {max_eta}")]
    RelaxedBoundInapplicable { eta: f64, max_eta: f64 },

    #[error("C too small for lambda, beta: C^(-1/4) = {eta} > 1/(8 kappa lambda); minimal admissible C = {min_c}")]
    BudgetTooSmall { eta: f64, min_c: f64 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("parse error at row {row}, col {col}: {message}")]
    Parse {
        row: usize,
        col: usize,
        message: String,
    },

    #[error("ragged row {row}: expected {expected} columns, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid label {label} at row {row}: {reason}")]
    InvalidLabel {
        row: usize,
        label: f64,
        reason: &'static str,
    },

    #[error("truncated record {record}: expected {expected} bytes, found {found}")]
    TruncatedRecord {
        record: usize,
        expected: usize,
        found: usize,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
