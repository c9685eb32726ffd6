//! Corpora, documents and passages; segmentation, preprocessing, loose tuple
//! alignment and the topic-based passage relevance score.

mod align;
mod filter;
mod io;
mod preprocess;
mod segment;
mod types;

pub use align::{form_tuples, Alignment, TupleSet};
pub use filter::{ds_rerank, filter_candidates, passage_score, smooth_rows, CandidateSplit, FilterScore};
pub use io::{read_alignment, read_documents_jsonl, write_documents_jsonl, DocumentRecord};
pub use preprocess::{preprocess_passage, preprocess_text, LangConfig, Lemmatizer};
pub use segment::{segment_document, SegmentMode};
pub use types::{Corpus, CorpusRole, Document, Passage, Tuple, TupleMember, Vocabulary};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("passage language {found:?} does not match preprocessing language {expected:?}")]
    LanguageMismatch { expected: String, found: String },
    #[error("word-topic matrix is degenerate: {0}")]
    DegenerateBeta(String),
    #[error("passage {0:?} has no in-vocabulary tokens")]
    EmptyPassage(String),
    #[error("passage {0:?} covers the whole vocabulary; excluded-word penalty is undefined")]
    FullCoverage(String),
    #[error("insufficient passages: have {available}, need {requested}")]
    InsufficientPassages { available: usize, requested: usize },
    #[error("percentile must lie strictly between 0 and 100, got {0}")]
    InvalidPercentile(f64),
    #[error("alignment references unknown document {0:?}")]
    DanglingAlignment(String),
    #[error("duplicate document id {0:?}")]
    DuplicateDocument(String),
    #[error("document {0:?} has empty text")]
    EmptyDocument(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
