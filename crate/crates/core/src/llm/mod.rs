//! Provider-agnostic chat-model tasks built on the shipped prompt templates.

mod cache;
mod http;
mod mock;
pub mod prompts;
mod provider;
mod tasks;

pub use cache::CachedChat;
pub use http::{ChatNli, HttpChatProvider};
pub use mock::{FixedNli, LexicalNli, MockChat, ScriptedChat};
pub use prompts::Template;
pub use provider::{ChatProvider, ChatRequest, Decoding, NliLabel, NliProvider};
pub use tasks::{
    affirmative_hypothesis, classify_discrepancy, decompose_query, generate_answer, generate_questions, is_abstention,
    nli_filter, parse_discrepancy, parse_questions, parse_subqueries, translate_documents, Answer, AnswerSide,
    DiscrepancyLabel, DiscrepancyRecord, NliVerdict, Question, QuestionOutcome, QuestionStatus, ReviewState, SubQuery,
    ABSTENTION_SENTINEL, SHORT_ABSTENTION_SENTINEL,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("provider error: {0}")]
    Provider(String),
    #[error("could not parse {task} output: {output:?}")]
    Parse { task: &'static str, output: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("template error: {0}")]
    Template(String),
}

/// Runs `attempt(0)`, retrying once with `attempt(1)` on a parse error.
pub(crate) fn with_parse_retry<T>(mut attempt: impl FnMut(u32) -> Result<T, LlmError>) -> Result<T, LlmError> {
    match attempt(0) {
        Err(LlmError::Parse { .. }) => attempt(1),
        other => other,
    }
}
