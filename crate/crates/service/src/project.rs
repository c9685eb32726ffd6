//! Directory-per-project persistence and the operations shared by the HTTP API and
//! the CLI.
//!
//! Layout:
//! ```text
//! project.json   id
//! mind.toml      configuration
//! corpora.json   registry of uploaded corpora and the alignment source
//! corpora/       uploaded documents, one JSON Lines file per corpus
//! state.json     per-stage status, fingerprints and artifact manifests
//! reviews.jsonl  append-only review log
//! artifacts/     one directory per finished stage
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use mind_core::corpus::{read_documents_jsonl, write_documents_jsonl, CorpusRole, Document};
use mind_core::llm::{DiscrepancyLabel, DiscrepancyRecord, ReviewState};
use mind_core::pltm::{TopicLabel, TopicStatus};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{hex, ProjectConfig};
use crate::error::{Result, ServiceError};
use crate::pipeline::{self, ExportRecord};
use crate::review::{append_event, read_events, ReviewAction, ReviewEvent, ReviewStates, ReviewTarget};
use crate::stage::Stage;
use crate::store::{file_digest, manifest, read_json, write_atomic, write_json, ProjectLock};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub language: String,
    pub role: CorpusRole,
    /// Relative to the project directory.
    pub file: String,
    pub digest: String,
    pub documents: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AlignmentSource {
    /// Pairs of (anchor document, comparison document) stored in `alignment.json`.
    Explicit { digest: String, pairs: usize },
    /// Pair documents with translations: uploaded translation corpora if present,
    /// otherwise produced by the chat provider during ingest.
    Translation,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusRegistry {
    pub corpora: Vec<CorpusEntry>,
    pub alignment: Option<AlignmentSource>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Pending,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub status: StageStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub artifacts: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl StageRecord {
    fn pending() -> Self {
        Self {
            status: StageStatus::Pending,
            fingerprint: None,
            artifacts: BTreeMap::new(),
            message: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProjectState {
    pub stages: BTreeMap<Stage, StageRecord>,
}

impl ProjectState {
    pub fn record(&self, s: Stage) -> StageRecord {
        self.stages.get(&s).cloned().unwrap_or_else(StageRecord::pending)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageView {
    pub stage: Stage,
    pub status: StageStatus,
    /// Done, but configuration or upstream outputs changed since.
    pub stale: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectStatus {
    pub id: String,
    pub corpora: CorpusRegistry,
    pub stages: Vec<StageView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageResult {
    pub stage: Stage,
    /// False when the stage was already up to date.
    pub ran: bool,
    pub artifacts: BTreeMap<String, String>,
    /// Stages reset to pending because their inputs changed.
    pub invalidated: Vec<Stage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProjectMeta {
    id: String,
}

/// Stages whose inputs include `stage`'s outputs.
pub fn data_dependencies(stage: Stage) -> &'static [Stage] {
    use Stage::*;
    match stage {
        Ingest => &[],
        Preprocess => &[Ingest],
        Train => &[Preprocess],
        Label => &[Train],
        Index => &[Preprocess, Train],
        Questions => &[Preprocess, Train, Label],
        Queries => &[Questions],
        Retrieve => &[Index, Queries],
        Answer => &[Preprocess, Questions, Retrieve],
        Detect => &[Answer],
        Export => &[Detect],
    }
}

/// Every stage that transitively consumes `stage`'s outputs, in DAG order.
pub fn dependents(stage: Stage) -> Vec<Stage> {
    let mut out: Vec<Stage> = Vec::new();
    for s in stage.downstream() {
        if data_dependencies(s).iter().any(|d| *d == stage || out.contains(d)) {
            out.push(s);
        }
    }
    out
}

pub struct Project {
    dir: PathBuf,
    id: String,
    config: ProjectConfig,
}

impl Project {
    pub fn create(dir: &Path, id: &str, config: ProjectConfig) -> Result<Self> {
        config.validate()?;
        if dir.join("project.json").exists() {
            return Err(ServiceError::ProjectExists(dir.display().to_string()));
        }
        fs::create_dir_all(dir.join("corpora"))?;
        fs::create_dir_all(dir.join("artifacts"))?;
        write_json(&dir.join("project.json"), &ProjectMeta { id: id.to_string() })?;
        write_atomic(&dir.join("mind.toml"), config.to_toml().as_bytes())?;
        write_json(&dir.join("corpora.json"), &CorpusRegistry::default())?;
        write_json(&dir.join("state.json"), &ProjectState::default())?;
        Self::open(dir)
    }

    /// Opens a project, applying environment overrides to its configuration and
    /// marking stages left running by a dead process as failed.
    pub fn open(dir: &Path) -> Result<Self> {
        Self::open_with_env(dir, |k| std::env::var(k).ok())
    }

    pub fn open_with_env(dir: &Path, env: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let meta_path = dir.join("project.json");
        if !meta_path.exists() {
            return Err(ServiceError::UnknownProject(dir.display().to_string()));
        }
        let meta: ProjectMeta = read_json(&meta_path)?;
        let mut config = ProjectConfig::load(&dir.join("mind.toml"))?;
        config.apply_env(env)?;
        config.validate()?;
        let p = Self {
            dir: dir.to_path_buf(),
            id: meta.id,
            config,
        };
        p.recover()?;
        Ok(p)
    }

    fn recover(&self) -> Result<()> {
        let Ok(_lock) = ProjectLock::acquire(&self.dir) else {
            return Ok(());
        };
        let mut state = self.state()?;
        let mut changed = false;
        for rec in state.stages.values_mut() {
            if rec.status == StageStatus::Running {
                rec.status = StageStatus::Failed;
                rec.message = Some("interrupted".into());
                changed = true;
            }
        }
        if changed {
            self.save_state(&state)?;
        }
        for entry in fs::read_dir(self.dir.join("artifacts"))? {
            let path = entry?.path();
            if path
                .file_name()
                .is_some_and(|n| n.to_string_lossy().starts_with(".staging-"))
            {
                fs::remove_dir_all(&path)?;
            }
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn config(&self) -> &ProjectConfig {
        &self.config
    }

    pub fn artifact_dir(&self, stage: Stage) -> PathBuf {
        self.dir.join("artifacts").join(stage.name())
    }

    pub fn registry(&self) -> Result<CorpusRegistry> {
        read_json(&self.dir.join("corpora.json"))
    }

    pub fn state(&self) -> Result<ProjectState> {
        read_json(&self.dir.join("state.json"))
    }

    fn save_state(&self, state: &ProjectState) -> Result<()> {
        write_json(&self.dir.join("state.json"), state)
    }

    pub fn review_log(&self) -> PathBuf {
        self.dir.join("reviews.jsonl")
    }

    pub fn reviews(&self) -> Result<ReviewStates> {
        Ok(ReviewStates::replay(&read_events(&self.review_log())?))
    }

    /// Optional Spanish-to-English style word map used by the offline providers.
    pub fn glossary(&self) -> Result<BTreeMap<String, String>> {
        let p = self.dir.join("glossary.json");
        if p.exists() {
            read_json(&p)
        } else {
            Ok(BTreeMap::new())
        }
    }

    pub fn set_glossary(&self, glossary: &BTreeMap<String, String>) -> Result<()> {
        let _lock = ProjectLock::acquire(&self.dir)?;
        write_json(&self.dir.join("glossary.json"), glossary)
    }

    /// Stores a corpus; replacing one with the same id invalidates every stage.
    pub fn add_corpus(
        &self,
        id: &str,
        language: &str,
        role: CorpusRole,
        documents: &[Document],
    ) -> Result<CorpusEntry> {
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(ServiceError::Invalid(format!(
                "corpus id {id:?} must be [A-Za-z0-9._-]+"
            )));
        }
        if documents.is_empty() {
            return Err(ServiceError::Invalid(format!("corpus {id:?} has no documents")));
        }
        // validates ids and text
        mind_core::corpus::Corpus::new(id, language, role, documents.to_vec())?;
        if let Some(d) = documents.iter().find(|d| d.language != language) {
            return Err(ServiceError::Invalid(format!(
                "document {} is in {:?}, corpus language is {language:?}",
                d.id, d.language
            )));
        }
        let _lock = ProjectLock::acquire(&self.dir)?;
        let file = format!("corpora/{id}.jsonl");
        let path = self.dir.join(&file);
        let tmp = tempfile::NamedTempFile::new_in(self.dir.join("corpora"))?;
        write_documents_jsonl(tmp.path(), documents)?;
        tmp.persist(&path).map_err(|e| e.error)?;
        let entry = CorpusEntry {
            id: id.to_string(),
            language: language.to_string(),
            role,
            file,
            digest: file_digest(&path)?,
            documents: documents.len(),
        };
        let mut reg = self.registry()?;
        reg.corpora.retain(|c| c.id != id);
        reg.corpora.push(entry.clone());
        reg.corpora.sort_by(|a, b| a.id.cmp(&b.id));
        write_json(&self.dir.join("corpora.json"), &reg)?;
        Ok(entry)
    }

    pub fn set_alignment(&self, pairs: Option<&[(String, String)]>) -> Result<AlignmentSource> {
        let _lock = ProjectLock::acquire(&self.dir)?;
        let source = match pairs {
            Some(pairs) => {
                let path = self.dir.join("alignment.json");
                write_json(&path, pairs)?;
                AlignmentSource::Explicit {
                    digest: file_digest(&path)?,
                    pairs: pairs.len(),
                }
            }
            None => AlignmentSource::Translation,
        };
        let mut reg = self.registry()?;
        reg.alignment = Some(source.clone());
        write_json(&self.dir.join("corpora.json"), &reg)?;
        Ok(source)
    }

    pub fn alignment_pairs(&self) -> Result<Vec<(String, String)>> {
        read_json(&self.dir.join("alignment.json"))
    }

    pub fn corpus_documents(&self, entry: &CorpusEntry) -> Result<Vec<Document>> {
        Ok(read_documents_jsonl(&self.dir.join(&entry.file))?)
    }

    /// Digest of everything a stage reads besides upstream artifacts.
    fn fingerprint(&self, stage: Stage, state: &ProjectState) -> Result<String> {
        let mut h = Sha256::new();
        h.update(stage.name());
        h.update(self.config.stage_hash(stage));
        for dep in data_dependencies(stage) {
            h.update(state.record(*dep).fingerprint.unwrap_or_default());
        }
        match stage {
            Stage::Ingest => {
                h.update(serde_json::to_vec(&self.registry()?).unwrap());
                h.update(serde_json::to_vec(&self.glossary()?).unwrap());
            }
            Stage::Questions => {
                h.update(serde_json::to_vec(&self.reviews()?.discarded_topics).unwrap());
                h.update(serde_json::to_vec(&self.glossary()?).unwrap());
            }
            Stage::Label | Stage::Index | Stage::Queries | Stage::Answer | Stage::Detect => {
                h.update(serde_json::to_vec(&self.glossary()?).unwrap());
            }
            Stage::Export => {
                let states = self.reviews()?;
                let d: Vec<_> = states
                    .discrepancies
                    .iter()
                    .map(|(k, (s, n))| (k, serde_json::to_string(s).unwrap(), n))
                    .collect();
                h.update(serde_json::to_vec(&d).unwrap());
            }
            _ => {}
        }
        Ok(hex(&h.finalize()))
    }

    fn is_current(&self, stage: Stage, state: &ProjectState) -> Result<bool> {
        let rec = state.record(stage);
        Ok(rec.status == StageStatus::Done && rec.fingerprint == Some(self.fingerprint(stage, state)?))
    }

    pub fn status(&self) -> Result<ProjectStatus> {
        let state = self.state()?;
        let mut stages = Vec::new();
        for s in Stage::ALL {
            let rec = state.record(s);
            let stale = rec.status == StageStatus::Done && !self.is_current(s, &state)?;
            stages.push(StageView {
                stage: s,
                status: rec.status,
                stale,
                message: rec.message,
                artifacts: rec.artifacts,
            });
        }
        Ok(ProjectStatus {
            id: self.id.clone(),
            corpora: self.registry()?,
            stages,
        })
    }

    fn invalidate(&self, state: &mut ProjectState, stages: &[Stage]) -> Result<Vec<Stage>> {
        let mut reset = Vec::new();
        for s in stages {
            let rec = state.record(*s);
            if rec.status != StageStatus::Pending {
                reset.push(*s);
            }
            state.stages.insert(*s, StageRecord::pending());
            let dir = self.artifact_dir(*s);
            if dir.exists() {
                fs::remove_dir_all(dir)?;
            }
        }
        Ok(reset)
    }

    /// Runs one stage. A stage that is done and whose inputs are unchanged is only
    /// rerun with `force`; a rerun resets every dependent stage to pending.
    pub fn run_stage(&self, stage: Stage, force: bool) -> Result<StageResult> {
        let _lock = ProjectLock::acquire(&self.dir)?;
        self.run_stage_locked(stage, force)
    }

    fn run_stage_locked(&self, stage: Stage, force: bool) -> Result<StageResult> {
        let mut state = self.state()?;
        for pred in stage.predecessors().into_iter().rev() {
            if !self.is_current(pred, &state)? {
                return Err(ServiceError::PredecessorIncomplete { stage, missing: pred });
            }
        }
        if !force && self.is_current(stage, &state)? {
            return Ok(StageResult {
                stage,
                ran: false,
                artifacts: state.record(stage).artifacts,
                invalidated: Vec::new(),
                note: Some("up to date".into()),
            });
        }
        let fingerprint = self.fingerprint(stage, &state)?;
        state.stages.insert(
            stage,
            StageRecord {
                status: StageStatus::Running,
                ..StageRecord::pending()
            },
        );
        self.save_state(&state)?;

        let staging = self.dir.join("artifacts").join(format!(".staging-{}", stage.name()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir_all(&staging)?;
        let outcome = pipeline::execute(self, stage, &staging);
        let note = match outcome {
            Ok(note) => note,
            Err(e) => {
                let _ = fs::remove_dir_all(&staging);
                let message = e.to_string();
                state.stages.insert(
                    stage,
                    StageRecord {
                        status: StageStatus::Failed,
                        message: Some(message.clone()),
                        ..StageRecord::pending()
                    },
                );
                self.save_state(&state)?;
                return Err(ServiceError::StageFailure { stage, message });
            }
        };
        let target = self.artifact_dir(stage);
        if target.exists() {
            fs::remove_dir_all(&target)?;
        }
        fs::rename(&staging, &target)?;
        let artifacts = manifest(&target)?;
        let invalidated = self.invalidate(&mut state, &dependents(stage))?;
        state.stages.insert(
            stage,
            StageRecord {
                status: StageStatus::Done,
                fingerprint: Some(fingerprint),
                artifacts: artifacts.clone(),
                message: note.clone(),
            },
        );
        self.save_state(&state)?;
        Ok(StageResult {
            stage,
            ran: true,
            artifacts,
            invalidated,
            note,
        })
    }

    /// Runs every stage in order, skipping the ones already up to date. `force`
    /// reruns all of them.
    pub fn run_all(&self, force: bool) -> Result<Vec<StageResult>> {
        let _lock = ProjectLock::acquire(&self.dir)?;
        let mut out = Vec::new();
        for s in Stage::ALL {
            out.push(self.run_stage_locked(s, force)?);
        }
        Ok(out)
    }

    pub(crate) fn require_done(&self, stage: Stage) -> Result<()> {
        if self.state()?.record(stage).status == StageStatus::Done {
            Ok(())
        } else {
            Err(ServiceError::NotReady(stage))
        }
    }

    /// Topic labels with review decisions applied.
    pub fn topics(&self) -> Result<Vec<TopicLabel>> {
        self.require_done(Stage::Label)?;
        let mut topics: Vec<TopicLabel> = read_json(&self.artifact_dir(Stage::Label).join("topics.json"))?;
        let discarded = self.reviews()?.discarded_topics;
        for t in &mut topics {
            t.status = if discarded.contains(&t.topic_id) {
                TopicStatus::Discarded
            } else {
                TopicStatus::Active
            };
        }
        Ok(topics)
    }

    fn review_topics(
        &self,
        ids: &[usize],
        action: ReviewAction,
        actor: &str,
        note: Option<String>,
    ) -> Result<Vec<TopicLabel>> {
        let k = self.topics()?.len();
        if let Some(bad) = ids.iter().find(|&&t| t >= k) {
            return Err(ServiceError::UnknownTopic(*bad));
        }
        let _lock = ProjectLock::acquire(&self.dir)?;
        for &t in ids {
            append_event(
                &self.review_log(),
                &ReviewEvent::now(actor, ReviewTarget::Topic(t), action, note.clone()),
            )?;
        }
        let mut state = self.state()?;
        let mut affected = vec![Stage::Questions];
        affected.extend(dependents(Stage::Questions));
        self.invalidate(&mut state, &affected)?;
        self.save_state(&state)?;
        drop(_lock);
        self.topics()
    }

    /// Excludes the topics' passages from question generation. Question generation
    /// and everything after it are reset.
    pub fn discard_topics(&self, ids: &[usize], actor: &str, note: Option<String>) -> Result<Vec<TopicLabel>> {
        self.review_topics(ids, ReviewAction::Discard, actor, note)
    }

    pub fn restore_topics(&self, ids: &[usize], actor: &str, note: Option<String>) -> Result<Vec<TopicLabel>> {
        self.review_topics(ids, ReviewAction::Restore, actor, note)
    }

    fn detected(&self) -> Result<Vec<DiscrepancyRecord>> {
        pipeline::load_discrepancies(self)
    }

    /// Detected records joined with their question, passages and answers, in
    /// detection order. `state` filters on the review state name.
    pub fn discrepancies(&self, state: Option<&str>) -> Result<Vec<ExportRecord>> {
        self.require_done(Stage::Detect)?;
        let all = pipeline::export_records(self, &self.reviews()?)?;
        Ok(match state {
            None => all,
            Some(s) => all.into_iter().filter(|r| r.review_state == s).collect(),
        })
    }

    pub fn review_discrepancy(
        &self,
        record_id: &str,
        action: ReviewAction,
        note: Option<String>,
        actor: &str,
    ) -> Result<DiscrepancyRecord> {
        if !matches!(
            action,
            ReviewAction::Confirm | ReviewAction::Reject | ReviewAction::Relabel(_)
        ) {
            return Err(ServiceError::Invalid(
                "discrepancies are confirmed, relabeled or rejected".into(),
            ));
        }
        self.require_done(Stage::Detect)?;
        let _lock = ProjectLock::acquire(&self.dir)?;
        let mut record = self
            .detected()?
            .into_iter()
            .find(|r| r.id == record_id)
            .ok_or_else(|| ServiceError::UnknownRecord(record_id.to_string()))?;
        let reviews = self.reviews()?;
        if reviews.discrepancy(record_id).0 != ReviewState::Pending {
            return Err(ServiceError::AlreadyReviewed(record_id.to_string()));
        }
        let event = ReviewEvent::now(actor, ReviewTarget::Discrepancy(record_id.to_string()), action, note);
        append_event(&self.review_log(), &event)?;
        let mut after = reviews;
        after.apply(&event);
        let (review, note) = after.discrepancy(record_id);
        record.review = review;
        record.reviewer_note = note;
        let mut state = self.state()?;
        self.invalidate(&mut state, &[Stage::Export])?;
        self.save_state(&state)?;
        Ok(record)
    }

    /// Records with review decisions applied. Rejected records are left out unless
    /// `include_rejected`.
    pub fn export_results(&self, include_rejected: bool) -> Result<Vec<ExportRecord>> {
        if self.state()?.record(Stage::Detect).status != StageStatus::Done {
            return Err(ServiceError::NothingToExport("detection has not run".into()));
        }
        let records = pipeline::export_records(self, &self.reviews()?)?;
        Ok(records
            .into_iter()
            .filter(|r| include_rejected || r.review_state != "rejected")
            .collect())
    }

    pub fn export_jsonl(&self, include_rejected: bool) -> Result<String> {
        Ok(pipeline::to_jsonl(&self.export_results(include_rejected)?))
    }
}

/// Parses a review action name; `relabel` needs a label.
pub fn parse_review_action(action: &str, label: Option<&str>) -> Result<ReviewAction> {
    match action.to_ascii_lowercase().as_str() {
        "confirm" => Ok(ReviewAction::Confirm),
        "reject" => Ok(ReviewAction::Reject),
        "relabel" => {
            let l = label.ok_or_else(|| ServiceError::Invalid("relabel needs a label".into()))?;
            let label: DiscrepancyLabel = l
                .parse()
                .map_err(|_| ServiceError::Invalid(format!("unknown label {l:?}")))?;
            Ok(ReviewAction::Relabel(label))
        }
        other => Err(ServiceError::Invalid(format!("unknown review action {other:?}"))),
    }
}
