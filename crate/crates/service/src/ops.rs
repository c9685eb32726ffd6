//! Operations on the projects under a root directory. The HTTP API and the CLI are
//! thin adapters over these; both take and return the same types.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mind_core::corpus::{CorpusRole, Document};
use mind_core::pltm::TopicLabel;
use serde::{Deserialize, Serialize};

use crate::config::ProjectConfig;
use crate::error::{Result, ServiceError};
use crate::pipeline::ExportRecord;
use crate::project::{parse_review_action, AlignmentSource, CorpusEntry, Project, ProjectStatus, StageResult};
use crate::stage::Stage;
use crate::synth::SyntheticCorpus;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateProject {
    pub id: String,
    #[serde(default)]
    pub config: Option<ProjectConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AddCorpus {
    pub id: String,
    pub language: String,
    pub role: CorpusRole,
    pub documents: Vec<Document>,
}

/// `pairs: None` aligns via machine translation.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SetAlignment {
    #[serde(default)]
    pub pairs: Option<Vec<(String, String)>>,
    #[serde(default)]
    pub glossary: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TopicReview {
    #[serde(default)]
    pub actor: Option<String>,
    #[serde(default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscrepancyReview {
    pub action: String,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub note: Option<String>,
    #[serde(default)]
    pub actor: Option<String>,
}

const DEFAULT_ACTOR: &str = "anonymous";

#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn project_dir(&self, id: &str) -> Result<PathBuf> {
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || "-_".contains(c)) {
            return Err(ServiceError::Invalid(format!(
                "project id {id:?} must be [A-Za-z0-9_-]+"
            )));
        }
        Ok(self.root.join(id))
    }

    pub fn open(&self, id: &str) -> Result<Project> {
        let dir = self.project_dir(id)?;
        Project::open(&dir).map_err(|e| match e {
            ServiceError::UnknownProject(_) => ServiceError::UnknownProject(id.to_string()),
            other => other,
        })
    }

    pub fn create_project(&self, req: CreateProject) -> Result<ProjectStatus> {
        let dir = self.project_dir(&req.id)?;
        Project::create(&dir, &req.id, req.config.unwrap_or_default())?.status()
    }

    pub fn add_corpus(&self, project: &str, req: AddCorpus) -> Result<CorpusEntry> {
        self.open(project)?
            .add_corpus(&req.id, &req.language, req.role, &req.documents)
    }

    pub fn set_alignment(&self, project: &str, req: SetAlignment) -> Result<AlignmentSource> {
        let p = self.open(project)?;
        if let Some(g) = &req.glossary {
            p.set_glossary(g)?;
        }
        p.set_alignment(req.pairs.as_deref())
    }

    pub fn run_stage(&self, project: &str, stage: &str, force: bool) -> Result<StageResult> {
        let stage: Stage = stage.parse()?;
        self.open(project)?.run_stage(stage, force)
    }

    pub fn run_all(&self, project: &str, force: bool) -> Result<Vec<StageResult>> {
        self.open(project)?.run_all(force)
    }

    pub fn status(&self, project: &str) -> Result<ProjectStatus> {
        self.open(project)?.status()
    }

    pub fn topics(&self, project: &str) -> Result<Vec<TopicLabel>> {
        self.open(project)?.topics()
    }

    /// `action` is `discard` or `restore`.
    pub fn review_topic(&self, project: &str, topic: usize, action: &str, req: TopicReview) -> Result<Vec<TopicLabel>> {
        let p = self.open(project)?;
        let actor = req.actor.as_deref().unwrap_or(DEFAULT_ACTOR);
        match action {
            "discard" => p.discard_topics(&[topic], actor, req.note),
            "restore" => p.restore_topics(&[topic], actor, req.note),
            other => Err(ServiceError::Invalid(format!("unknown topic action {other:?}"))),
        }
    }

    pub fn discrepancies(&self, project: &str, state: Option<&str>) -> Result<Vec<ExportRecord>> {
        self.open(project)?.discrepancies(state)
    }

    pub fn review_discrepancy(&self, project: &str, record: &str, req: DiscrepancyReview) -> Result<ExportRecord> {
        let p = self.open(project)?;
        let action = parse_review_action(&req.action, req.label.as_deref())?;
        let actor = req.actor.as_deref().unwrap_or(DEFAULT_ACTOR);
        p.review_discrepancy(record, action, req.note, actor)?;
        p.discrepancies(None)?
            .into_iter()
            .find(|r| r.id == record)
            .ok_or_else(|| ServiceError::UnknownRecord(record.to_string()))
    }

    pub fn export(&self, project: &str, include_rejected: bool) -> Result<String> {
        self.open(project)?.export_jsonl(include_rejected)
    }

    /// Creates a project holding `corpus` with settings sized for it.
    pub fn create_synthetic(&self, id: &str, corpus: &SyntheticCorpus) -> Result<ProjectStatus> {
        self.create_project(CreateProject {
            id: id.to_string(),
            config: Some(crate::synth::synthetic_config()),
        })?;
        self.add_corpus(
            id,
            AddCorpus {
                id: "en".into(),
                language: "en".into(),
                role: CorpusRole::Anchor,
                documents: corpus.anchor.clone(),
            },
        )?;
        self.add_corpus(
            id,
            AddCorpus {
                id: "es".into(),
                language: "es".into(),
                role: CorpusRole::Comparison,
                documents: corpus.comparison.clone(),
            },
        )?;
        self.set_alignment(
            id,
            SetAlignment {
                pairs: Some(corpus.alignment.clone()),
                glossary: Some(corpus.glossary.clone()),
            },
        )?;
        self.status(id)
    }
}
