use thiserror::Error;

use crate::stage::Stage;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("stage {stage} needs {missing} to be done first")]
    PredecessorIncomplete { stage: Stage, missing: Stage },
    #[error("stage {stage} failed: {message}")]
    StageFailure { stage: Stage, message: String },
    #[error("stage {0} has not been run")]
    NotReady(Stage),
    #[error("unknown stage {0:?}")]
    UnknownStage(String),
    #[error("unknown topic {0}")]
    UnknownTopic(usize),
    #[error("unknown discrepancy record {0:?}")]
    UnknownRecord(String),
    #[error("record {0:?} has already been reviewed")]
    AlreadyReviewed(String),
    #[error("nothing to export: {0}")]
    NothingToExport(String),
    #[error("unknown project {0:?}")]
    UnknownProject(String),
    #[error("project already exists at {0}")]
    ProjectExists(String),
    #[error("project is locked by process {pid}")]
    Locked { pid: u32 },
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("corrupt project file {path}: {message}")]
    Corrupt { path: String, message: String },
    #[error(transparent)]
    Corpus(#[from] mind_core::corpus::CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ServiceError {
    pub(crate) fn stage(stage: Stage, err: impl std::fmt::Display) -> Self {
        ServiceError::StageFailure {
            stage,
            message: err.to_string(),
        }
    }
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;
