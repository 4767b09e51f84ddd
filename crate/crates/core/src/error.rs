//! Crate-wide error type.
//!
//! Every failure mode that callers may want to branch on (CLI exit codes,
//! tests asserting a specific rejection) gets its own variant; incidental
//! detail goes into the message.

use thiserror::Error;

/// Errors produced by formula parsing, table ingestion, design construction
/// and model fitting.
#[derive(Debug, Error)]
pub enum Error {
    // ---- formula ----
    #[error("empty model formula")]
    EmptyFormula,
    #[error("unknown factor label `{label}`")]
    UnknownFactor { label: String },
    #[error("factor `{factor}` appears more than once in group `{group}`")]
    DuplicateFactor { factor: String, group: String },
    #[error("invalid formula syntax: {detail}")]
    FormulaSyntax { detail: String },
    #[error("invalid factor name `{name}`: {detail}")]
    InvalidFactorName { name: String, detail: String },
    #[error("outcome `{outcome}` has no main effect in the log-linear model")]
    NoOutcomeMainEffect { outcome: String },

    // ---- table ----
    #[error("invalid factor specification for `{name}`: {detail}")]
    InvalidFactorSpec { name: String, detail: String },
    #[error("count vector has length {actual}, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("negative count {value} at position {position}")]
    NegativeCount { value: i64, position: usize },
    #[error("fractional count `{value}` rejected; cell counts must be integers")]
    FractionalCount { value: String },
    #[error("table has no observations (all counts zero)")]
    EmptyTable,
    #[error("csv schema error: {detail}")]
    CsvSchema { detail: String },
    #[error("unknown level `{level}` for factor `{factor}`")]
    UnknownLevel { factor: String, level: String },
    #[error("cell {cell} appears more than once in input")]
    DuplicateCell { cell: String },
    #[error("cell {cell} missing from input")]
    MissingCell { cell: String },
    #[error("outcome `{outcome}` must be binary, has {levels} levels")]
    OutcomeNotBinary { outcome: String, levels: usize },

    // ---- design ----
    #[error("design matrix is rank deficient: rank {rank} < {columns} columns")]
    RankDeficient { rank: usize, columns: usize },
    #[error("logistic parameter `{label}` has no matching log-linear parameter")]
    LabelMismatch { label: String },
    #[error("model is not correspondence-eligible: {detail}")]
    NotEligible { detail: String },

    // ---- glm ----
    #[error("dimension mismatch: {detail}")]
    DimensionMismatch { detail: String },
    #[error("invalid response: {detail}")]
    InvalidResponse { detail: String },
    #[error("IRLS did not converge in {iterations} iterations (max score residual {score_residual:.3e})")]
    NotConverged {
        iterations: usize,
        score_residual: f64,
    },
    #[error("MLE may not exist: estimate magnitude exceeded {bound} during iteration {iteration}")]
    MleMayNotExist { bound: f64, iteration: usize },
    #[error("weighted least-squares system is singular")]
    SingularSystem,
    #[error("deviance precondition violated: {detail}")]
    DeviancePrecondition { detail: String },
    #[error("invalid fitted value: {detail}")]
    InvalidFitted { detail: String },
    #[error("confidence level must lie in (0, 1), got alpha = {alpha}")]
    InvalidAlpha { alpha: f64 },

    // ---- bundled data ----
    #[error("bundled dataset checksum mismatch: expected {expected}, computed {actual}")]
    ChecksumMismatch { expected: String, actual: String },
}

pub type Result<T> = std::result::Result<T, Error>;
