//! Retrieval metrics with bootstrap intervals, multi-judge gold construction, and
//! the controlled discrepancy dataset with classifier scoring.

mod classifier;
mod controlled;
mod gold;
mod metrics;

pub use classifier::{score_classifier, ClassScores, ClassifierReport};
pub use controlled::{
    build_controlled_dataset, parse_triplet, Composition, ControlledItem, ControlledSource, DplaceDefinition,
    FeverClaim, FeverLabel, MISSING_DATA,
};
pub use gold::{judge_gold, parse_relevance, GoldJudgment, Verdict};
pub use metrics::{bootstrap_ci, evaluate_rankings, mmrr, ndcg, precision_at, recall_at, MetricReport, MetricSummary};

use thiserror::Error;

use crate::llm::LlmError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold set is empty")]
    EmptyGold,
    #[error("cutoff L must be at least 1")]
    InvalidCutoff,
    #[error("bootstrap needs at least 2 queries, got {0}")]
    TooFewQueries(usize),
    #[error("predictions ({predictions}) and gold ({gold}) differ in length")]
    LengthMismatch { predictions: usize, gold: usize },
    #[error("no items to score")]
    EmptyInput,
    #[error("no judges configured")]
    NoJudges,
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
