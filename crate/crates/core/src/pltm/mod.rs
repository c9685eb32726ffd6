//! Polylingual topic model trained by collapsed Gibbs sampling over tuples of
//! documents that share one topic distribution across languages.

mod coherence;
mod labeling;
mod model;
mod persist;
mod sampler;

pub use coherence::{npmi_coherence, npmi_pair, sweep_k, CoherenceReport, SweepRow};
pub use labeling::{label_topics, top_words, LabelingInput, TopicLabel, TopicStatus};
pub use model::{dominant_topic, PolyTopicModel};
pub use persist::{load_model, save_model};
pub use sampler::{
    infer_theta, train, train_with_observer, IterationState, TokenizedPassage, TrainConfig, TrainingSide, TrainingTuple,
};

use thiserror::Error;

use crate::llm::LlmError;
use crate::matrix::MatrixError;

#[derive(Debug, Error)]
pub enum PltmError {
    #[error("corpus has no tokens")]
    EmptyCorpus,
    #[error("tuple {tuple} side {language:?} has no tokens")]
    EmptySide { tuple: usize, language: String },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("language {0:?} is not part of the model")]
    UnknownLanguage(String),
    #[error("topic {topic} has fewer than {top_n} vocabulary words")]
    InsufficientVocabulary { topic: usize, top_n: usize },
    #[error("empty K range")]
    EmptyRange,
    #[error("labeling topic {topic}: {source}")]
    Labeling {
        topic: usize,
        #[source]
        source: LlmError,
    },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("model metadata: {0}")]
    Metadata(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
