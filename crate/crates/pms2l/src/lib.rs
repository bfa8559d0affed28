//! Penalized multiclass semi-supervised learning (PMS2L).
//!
//! The pipeline has two stages: cluster the unlabeled pool and keep only the
//! clusters whose labeled examples concentrate on at most `kappa` classes
//! (the "confident" clusters), then fit a norm-constrained linear multiclass
//! model by projected subgradient descent on a margin loss that is penalized
//! whenever an unlabeled point in a confident cluster is scored against that
//! cluster's predominant classes.
//!
//! Alongside the pipeline the crate evaluates the quantities appearing in the
//! accompanying generalization analysis: the minimal matching distance between
//! clusterings, clustering-stability estimates, Monte-Carlo and closed-form
//! Rademacher complexities, and the full risk-bound expressions.

pub mod bounds;
pub mod cli;
pub mod clustering;
pub mod confident;
pub mod data;
pub mod eval;
pub mod hungarian;
pub mod objective;
pub mod seed;
pub mod trainer;

use thiserror::Error;

/// Crate-wide error type. The CLI maps variants onto exit codes, so keep the
/// categories coarse: usage/configuration, data, and missing pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing prerequisite: run {stage} first ({detail})")]
    MissingPrerequisite { stage: &'static str, detail: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
