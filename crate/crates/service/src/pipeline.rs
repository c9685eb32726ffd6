//! Stage executors. Each reads upstream artifacts from the project and writes its
//! own into a staging directory that the orchestrator moves into place.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use mind_core::corpus::{
    form_tuples, preprocess_passage, segment_document, Alignment, Corpus, CorpusRole, Document, LangConfig, Passage,
    TupleSet,
};
use mind_core::index::{build_index, load_index, merge_evidence, save_index, EvidenceSet, IndexError, TopicIndex};
use mind_core::llm::{
    classify_discrepancy, decompose_query, generate_answer, generate_questions, nli_filter, translate_documents,
    Answer, AnswerSide, DiscrepancyRecord, Question, QuestionOutcome, QuestionStatus, ReviewState, SubQuery,
};
use mind_core::matrix::Matrix;
use mind_core::pltm::{
    dominant_topic, label_topics, load_model, save_model, train, LabelingInput, PolyTopicModel, TokenizedPassage,
    TrainingSide, TrainingTuple,
};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::project::{AlignmentSource, Project};
use crate::providers::{chat_provider, embedder, provider_set};
use crate::review::ReviewStates;
use crate::stage::Stage;
use crate::store::{read_json, read_jsonl, write_json, write_jsonl};

const INDEX_NAME: &str = "comparison";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredPassage {
    pub corpus_id: String,
    pub role: CorpusRole,
    #[serde(flatten)]
    pub passage: Passage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPassage {
    pub passage_id: String,
    pub reason: String,
}

/// One detected discrepancy with the texts a reviewer needs; also the export row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub id: String,
    pub question_id: String,
    pub question: String,
    pub anchor_passage_id: String,
    pub anchor_passage: String,
    pub anchor_answer: String,
    pub comparison_passage_id: String,
    pub comparison_passage: String,
    pub comparison_answer: String,
    /// Label assigned by the classifier.
    pub model_label: String,
    /// Label after review.
    pub label: String,
    pub reason: String,
    pub review_state: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reviewer_note: Option<String>,
}

pub fn to_jsonl(records: &[ExportRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

fn fail(stage: Stage) -> impl Fn(&dyn std::fmt::Display) -> ServiceError {
    move |e| ServiceError::stage(stage, e)
}

/// Runs `stage`, writing artifacts into `out`. Returns an optional note for the status.
pub fn execute(project: &Project, stage: Stage, out: &Path) -> Result<Option<String>> {
    match stage {
        Stage::Ingest => ingest(project, out),
        Stage::Preprocess => preprocess(project, out),
        Stage::Train => train_stage(project, out),
        Stage::Label => label(project, out),
        Stage::Index => index(project, out),
        Stage::Questions => questions(project, out),
        Stage::Queries => queries(project, out),
        Stage::Retrieve => retrieve(project, out),
        Stage::Answer => answer(project, out),
        Stage::Detect => detect(project, out),
        Stage::Export => export(project, out),
    }
}

fn artifact(project: &Project, stage: Stage, name: &str) -> std::path::PathBuf {
    project.artifact_dir(stage).join(name)
}

// ---------------------------------------------------------------- ingest

fn ingest(project: &Project, out: &Path) -> Result<Option<String>> {
    let f = fail(Stage::Ingest);
    let cfg = project.config();
    let reg = project.registry()?;
    let mut corpora = Vec::new();
    for e in &reg.corpora {
        let docs = project.corpus_documents(e)?;
        corpora.push(Corpus::new(&e.id, &e.language, e.role, docs)?);
    }
    let pick = |role: CorpusRole, lang: &str| -> Result<Corpus> {
        let found: Vec<&Corpus> = corpora
            .iter()
            .filter(|c| c.role == role && c.language == lang)
            .collect();
        match found.as_slice() {
            [one] => Ok((*one).clone()),
            [] => Err(f(&format!("no {role:?} corpus in language {lang:?}"))),
            _ => Err(f(&format!("more than one {role:?} corpus in language {lang:?}"))),
        }
    };
    let anchor = pick(CorpusRole::Anchor, &cfg.anchor_language)?;
    let comparison = pick(CorpusRole::Comparison, &cfg.comparison_language)?;
    let mut used = vec![anchor.clone(), comparison.clone()];
    let alignment = match &reg.alignment {
        None => return Err(f(&"no alignment configured")),
        Some(AlignmentSource::Explicit { .. }) => Alignment::Explicit(project.alignment_pairs()?),
        Some(AlignmentSource::Translation) => {
            let translations = |source: &Corpus, target_lang: &str| -> Result<Corpus> {
                let uploaded = corpora.iter().find(|c| {
                    c.role == CorpusRole::Translation
                        && c.language == target_lang
                        && c.documents.iter().all(|d| {
                            d.translation_of
                                .as_deref()
                                .is_some_and(|s| source.document(s).is_some())
                        })
                });
                match uploaded {
                    Some(c) => Ok(c.clone()),
                    None => {
                        let chat = chat_provider(project)?;
                        let docs: Vec<Document> =
                            translate_documents(&source.documents, target_lang, chat.as_ref()).map_err(|e| f(&e))?;
                        Ok(Corpus::new(
                            format!("{}@{target_lang}", source.id),
                            target_lang,
                            CorpusRole::Translation,
                            docs,
                        )?)
                    }
                }
            };
            let at = translations(&anchor, &comparison.language)?;
            let ct = translations(&comparison, &anchor.language)?;
            used.push(at.clone());
            used.push(ct.clone());
            Alignment::ViaTranslation {
                anchor_translations: at,
                comparison_translations: ct,
            }
        }
    };
    let tuples = form_tuples(&anchor, &comparison, &alignment)?;
    if tuples.tuples.is_empty() {
        return Err(f(&"alignment produced no tuples"));
    }
    write_json(&out.join("corpora.json"), &used)?;
    write_json(&out.join("tuples.json"), &tuples)?;
    Ok(Some(format!(
        "{} tuples, {} unaligned documents",
        tuples.tuples.len(),
        tuples.unaligned.len()
    )))
}

fn load_corpora(project: &Project) -> Result<Vec<Corpus>> {
    read_json(&artifact(project, Stage::Ingest, "corpora.json"))
}

// ---------------------------------------------------------------- preprocess

fn preprocess(project: &Project, out: &Path) -> Result<Option<String>> {
    let cfg = project.config();
    let corpora = load_corpora(project)?;
    let mut rows = Vec::new();
    for c in &corpora {
        let extra = cfg.preprocess.stopwords.get(&c.language).cloned().unwrap_or_default();
        let lang = LangConfig::default_for(&c.language).with_stopwords(extra);
        for d in &c.documents {
            for p in segment_document(d, cfg.segment) {
                rows.push(StoredPassage {
                    corpus_id: c.id.clone(),
                    role: c.role,
                    passage: preprocess_passage(&p, &lang)?,
                });
            }
        }
    }
    write_jsonl(&out.join("passages.jsonl"), &rows)?;
    Ok(Some(format!("{} passages", rows.len())))
}

pub fn load_passages(project: &Project) -> Result<Vec<StoredPassage>> {
    read_jsonl(&artifact(project, Stage::Preprocess, "passages.jsonl"))
}

// ---------------------------------------------------------------- train

fn training_tuples(tuples: &TupleSet, passages: &[StoredPassage], min_tokens: usize) -> (Vec<TrainingTuple>, usize) {
    let mut by_doc: HashMap<(&str, &str), Vec<TokenizedPassage>> = HashMap::new();
    for p in passages {
        if p.passage.tokens.len() >= min_tokens.max(1) {
            by_doc
                .entry((p.corpus_id.as_str(), p.passage.document_id.as_str()))
                .or_default()
                .push(TokenizedPassage {
                    id: p.passage.id.clone(),
                    tokens: p.passage.tokens.clone(),
                });
        }
    }
    let mut out = Vec::new();
    let mut skipped = 0;
    for t in &tuples.tuples {
        let sides: Vec<TrainingSide> = t
            .members
            .iter()
            .filter_map(|m| {
                by_doc
                    .get(&(m.corpus_id.as_str(), m.document_id.as_str()))
                    .map(|ps| TrainingSide {
                        corpus_id: m.corpus_id.clone(),
                        language: m.language.clone(),
                        passages: ps.clone(),
                    })
            })
            .collect();
        if sides.len() == t.members.len() {
            out.push(TrainingTuple { sides });
        } else {
            skipped += 1;
        }
    }
    (out, skipped)
}

fn train_stage(project: &Project, out: &Path) -> Result<Option<String>> {
    let f = fail(Stage::Train);
    let cfg = project.config();
    let tuples: TupleSet = read_json(&artifact(project, Stage::Ingest, "tuples.json"))?;
    let passages = load_passages(project)?;
    let (training, skipped) = training_tuples(&tuples, &passages, cfg.preprocess.min_tokens);
    if skipped > 0 {
        tracing::warn!(skipped, "tuples without tokens on every side left out of training");
    }
    let model = train(&training, &cfg.topics.train).map_err(|e| f(&e))?;
    save_model(&model, &out.join("model")).map_err(|e| f(&e))?;
    Ok(Some(format!("{} tuples, {} skipped", training.len(), skipped)))
}

pub fn load_trained(project: &Project) -> Result<PolyTopicModel> {
    load_model(&project.artifact_dir(Stage::Train).join("model")).map_err(|e| ServiceError::stage(Stage::Train, e))
}

// ---------------------------------------------------------------- label

fn label(project: &Project, out: &Path) -> Result<Option<String>> {
    let f = fail(Stage::Label);
    let cfg = project.config();
    let model = load_trained(project)?;
    let passages = load_passages(project)?;
    let text: HashMap<String, String> = passages
        .iter()
        .filter(|p| p.passage.language == cfg.anchor_language)
        .map(|p| (p.passage.id.clone(), p.passage.text.clone()))
        .collect();
    let chat = chat_provider(project)?;
    let input = LabelingInput {
        language: &cfg.anchor_language,
        passage_text: &text,
        docs_per_topic: cfg.topics.docs_per_topic,
        n_keywords: cfg.topics.n_keywords,
    };
    let topics = label_topics(&model, &input, chat.as_ref()).map_err(|e| f(&e))?;
    write_json(&out.join("topics.json"), &topics)?;
    Ok(Some(format!("{} topics", topics.len())))
}

// ---------------------------------------------------------------- index

fn embed_all(provider: &dyn mind_core::index::EmbeddingProvider<f32>, texts: &[&str]) -> Result<Vec<Option<Vec<f32>>>> {
    let f = fail(Stage::Index);
    let mut out = Vec::with_capacity(texts.len());
    for chunk in texts.chunks(64) {
        match provider.embed(chunk) {
            Ok(vs) => out.extend(vs.into_iter().map(Some)),
            Err(IndexError::ZeroVector(_)) => {
                for t in chunk {
                    match provider.embed(&[t]) {
                        Ok(mut v) => out.push(v.pop()),
                        Err(IndexError::ZeroVector(_)) => out.push(None),
                        Err(e) => return Err(f(&e)),
                    }
                }
            }
            Err(e) => return Err(f(&e)),
        }
    }
    Ok(out)
}

fn index(project: &Project, out: &Path) -> Result<Option<String>> {
    let f = fail(Stage::Index);
    let cfg = project.config();
    let model = load_trained(project)?;
    let passages = load_passages(project)?;
    let candidates: Vec<&StoredPassage> = passages
        .iter()
        .filter(|p| p.role == CorpusRole::Comparison && model.theta_of(&p.passage.id).is_some())
        .collect();
    let provider = embedder(project)?;
    let texts: Vec<&str> = candidates.iter().map(|p| p.passage.text.as_str()).collect();
    let vectors = embed_all(provider.as_ref(), &texts)?;
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut theta_rows = Vec::new();
    for (p, v) in candidates.iter().zip(vectors) {
        if let Some(v) = v {
            ids.push(p.passage.id.clone());
            rows.push(v);
            theta_rows.push(model.theta_of(&p.passage.id).unwrap().to_vec());
        }
    }
    if ids.is_empty() {
        return Err(f(&"no comparison passages to index"));
    }
    let embeddings = Matrix::from_rows(&rows).map_err(|e| f(&e))?;
    let theta = Matrix::from_rows(&theta_rows).map_err(|e| f(&e))?;
    let built = build_index::<f32>(ids, embeddings, &theta, cfg.index).map_err(|e| f(&e))?;
    save_index(&built, out, INDEX_NAME).map_err(|e| f(&e))?;
    Ok(Some(format!("{} passages indexed", built.len())))
}

pub fn load_topic_index(project: &Project) -> Result<TopicIndex<f32>> {
    load_index(&project.artifact_dir(Stage::Index), INDEX_NAME).map_err(|e| ServiceError::stage(Stage::Index, e))
}

// ---------------------------------------------------------------- questions

struct TextLookup {
    passages: HashMap<String, StoredPassage>,
    documents: HashMap<String, String>,
    excerpt_chars: usize,
}

impl TextLookup {
    fn new(project: &Project) -> Result<Self> {
        let passages = load_passages(project)?
            .into_iter()
            .map(|p| (p.passage.id.clone(), p))
            .collect();
        let documents = load_corpora(project)?
            .into_iter()
            .flat_map(|c| c.documents)
            .map(|d| (d.id, d.raw_text))
            .collect();
        Ok(Self {
            passages,
            documents,
            excerpt_chars: project.config().questions.excerpt_chars,
        })
    }

    fn text(&self, id: &str) -> &str {
        self.passages.get(id).map(|p| p.passage.text.as_str()).unwrap_or("")
    }

    fn excerpt(&self, passage_id: &str) -> String {
        let Some(p) = self.passages.get(passage_id) else {
            return String::new();
        };
        let doc = self
            .documents
            .get(&p.passage.document_id)
            .map(String::as_str)
            .unwrap_or("");
        let mut s: String = doc.chars().take(self.excerpt_chars).collect();
        if s.len() < doc.len() {
            s.push_str(" [...]");
        }
        s
    }
}

fn questions(project: &Project, out: &Path) -> Result<Option<String>> {
    let f = fail(Stage::Questions);
    let cfg = project.config();
    let model = load_trained(project)?;
    let lookup = TextLookup::new(project)?;
    let discarded = project.reviews()?.discarded_topics;
    let mut eligible: Vec<&StoredPassage> = lookup
        .passages
        .values()
        .filter(|p| p.role == CorpusRole::Anchor)
        .filter(|p| {
            model
                .theta_of(&p.passage.id)
                .is_some_and(|t| !discarded.contains(&dominant_topic(t)))
        })
        .collect();
    eligible.sort_by(|a, b| a.passage.id.cmp(&b.passage.id));
    if let Some(max) = cfg.questions.max_passages {
        if max < eligible.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.questions.sample_seed);
            let mut picked: Vec<usize> = sample(&mut rng, eligible.len(), max).into_vec();
            picked.sort_unstable();
            eligible = picked.into_iter().map(|i| eligible[i]).collect();
        }
    }
    if eligible.is_empty() {
        tracing::warn!("no anchor passages eligible for question generation");
    }
    let providers = provider_set(project)?;
    let results: Vec<(String, QuestionOutcome)> = eligible
        .par_iter()
        .map(|p| {
            let id = &p.passage.id;
            generate_questions(id, &p.passage.text, &lookup.excerpt(id), providers.chat.as_ref())
                .map(|o| (id.clone(), o))
                .map_err(|e| f(&format!("{id}: {e}")))
        })
        .collect::<Result<_>>()?;
    let mut all = Vec::new();
    let mut skipped = Vec::new();
    for (pid, outcome) in results {
        match outcome {
            QuestionOutcome::Questions(qs) => all.extend(qs),
            QuestionOutcome::NotSuitable(reason) => skipped.push(SkippedPassage {
                passage_id: pid,
                reason,
            }),
        }
    }
    let all: Vec<Question> = all
        .into_par_iter()
        .map(|mut q| {
            if cfg.questions.nli_filter {
                let anchor = lookup.text(&q.passage_id).to_string();
                nli_filter(&mut q, &anchor, providers.nli.as_ref()).map_err(|e| f(&e))?;
            } else {
                q.status = QuestionStatus::Active;
            }
            Ok(q)
        })
        .collect::<Result<_>>()?;
    let active = all.iter().filter(|q| q.status == QuestionStatus::Active).count();
    write_jsonl(&out.join("questions.jsonl"), &all)?;
    write_jsonl(&out.join("skipped.jsonl"), &skipped)?;
    let warning = if eligible.is_empty() {
        " (no eligible passages)"
    } else {
        ""
    };
    Ok(Some(format!(
        "{} passages, {} questions, {active} active, {} passages unsuitable{warning}",
        eligible.len(),
        all.len(),
        skipped.len()
    )))
}

pub fn load_questions(project: &Project) -> Result<Vec<Question>> {
    read_jsonl(&artifact(project, Stage::Questions, "questions.jsonl"))
}

fn active_questions(project: &Project) -> Result<Vec<Question>> {
    Ok(load_questions(project)?
        .into_iter()
        .filter(|q| q.status == QuestionStatus::Active)
        .collect())
}

// ---------------------------------------------------------------- queries

fn queries(project: &Project, out: &Path) -> Result<Option<String>> {
    let f = fail(Stage::Queries);
    let lookup = TextLookup::new(project)?;
    let chat = chat_provider(project)?;
    let qs = active_questions(project)?;
    let subs: Vec<Vec<SubQuery>> = qs
        .par_iter()
        .map(|q| decompose_query(lookup.text(&q.passage_id), q, chat.as_ref()).map_err(|e| f(&e)))
        .collect::<Result<_>>()?;
    let flat: Vec<SubQuery> = subs.into_iter().flatten().collect();
    write_jsonl(&out.join("subqueries.jsonl"), &flat)?;
    Ok(Some(format!("{} subqueries for {} questions", flat.len(), qs.len())))
}

// ---------------------------------------------------------------- retrieve

fn retrieve(project: &Project, out: &Path) -> Result<Option<String>> {
    let f = fail(Stage::Retrieve);
    let params = project.config().retrieval;
    let model = load_trained(project)?;
    let index = load_topic_index(project)?;
    let provider = embedder(project)?;
    let subs: Vec<SubQuery> = read_jsonl(&artifact(project, Stage::Queries, "subqueries.jsonl"))?;
    let mut by_question: BTreeMap<&str, Vec<&SubQuery>> = BTreeMap::new();
    for s in &subs {
        by_question.entry(&s.question_id).or_default().push(s);
    }
    let qs = active_questions(project)?;
    let sets: Vec<EvidenceSet> = qs
        .par_iter()
        .map(|q| {
            let theta = model
                .theta_of(&q.passage_id)
                .ok_or_else(|| f(&format!("no topic proportions for {}", q.passage_id)))?;
            let mut lists = Vec::new();
            let mut texts: Vec<&str> = by_question
                .get(q.id.as_str())
                .map(|v| v.iter().map(|s| s.text.as_str()).collect())
                .unwrap_or_default();
            if texts.is_empty() {
                texts.push(&q.text);
            }
            for t in texts {
                match index.search_text(provider.as_ref(), t, theta, &params) {
                    Ok(o) => lists.push(o.hits),
                    Err(IndexError::ZeroVector(_)) => {}
                    Err(e) => return Err(f(&e)),
                }
            }
            Ok(merge_evidence(&q.id, &lists, params.l))
        })
        .collect::<Result<_>>()?;
    let total: usize = sets.iter().map(|s| s.passages.len()).sum();
    write_jsonl(&out.join("evidence.jsonl"), &sets)?;
    Ok(Some(format!("{total} evidence passages for {} questions", sets.len())))
}

// ---------------------------------------------------------------- answer

fn answer(project: &Project, out: &Path) -> Result<Option<String>> {
    let f = fail(Stage::Answer);
    let lookup = TextLookup::new(project)?;
    let chat = chat_provider(project)?;
    let qs: HashMap<String, Question> = active_questions(project)?
        .into_iter()
        .map(|q| (q.id.clone(), q))
        .collect();
    let sets: Vec<EvidenceSet> = read_jsonl(&artifact(project, Stage::Retrieve, "evidence.jsonl"))?;
    let per_question: Vec<Vec<Answer>> = sets
        .par_iter()
        .map(|set| {
            let q = qs
                .get(&set.question_id)
                .ok_or_else(|| f(&format!("unknown question {}", set.question_id)))?;
            let mut answers = Vec::with_capacity(set.passages.len() + 1);
            let pid = &q.passage_id;
            answers.push(
                generate_answer(
                    q,
                    pid,
                    lookup.text(pid),
                    &lookup.excerpt(pid),
                    AnswerSide::Anchor,
                    chat.as_ref(),
                )
                .map_err(|e| f(&e))?,
            );
            for hit in &set.passages {
                let cid = &hit.passage_id;
                answers.push(
                    generate_answer(
                        q,
                        cid,
                        lookup.text(cid),
                        &lookup.excerpt(cid),
                        AnswerSide::Comparison,
                        chat.as_ref(),
                    )
                    .map_err(|e| f(&e))?,
                );
            }
            Ok(answers)
        })
        .collect::<Result<_>>()?;
    let flat: Vec<Answer> = per_question.into_iter().flatten().collect();
    let abstained = flat.iter().filter(|a| a.abstained).count();
    write_jsonl(&out.join("answers.jsonl"), &flat)?;
    Ok(Some(format!("{} answers, {abstained} abstentions", flat.len())))
}

fn load_answers(project: &Project) -> Result<Vec<Answer>> {
    read_jsonl(&artifact(project, Stage::Answer, "answers.jsonl"))
}

// ---------------------------------------------------------------- detect

fn detect(project: &Project, out: &Path) -> Result<Option<String>> {
    let f = fail(Stage::Detect);
    let chat = chat_provider(project)?;
    let qs: HashMap<String, Question> = active_questions(project)?
        .into_iter()
        .map(|q| (q.id.clone(), q))
        .collect();
    let answers = load_answers(project)?;
    let mut groups: Vec<(&Answer, Vec<&Answer>)> = Vec::new();
    for a in &answers {
        match a.side {
            AnswerSide::Anchor => groups.push((a, Vec::new())),
            AnswerSide::Comparison => match groups.last_mut() {
                Some((anchor, cs)) if anchor.question_id == a.question_id => cs.push(a),
                _ => return Err(f(&format!("comparison answer {} has no anchor answer", a.id))),
            },
        }
    }
    let records: Vec<Vec<DiscrepancyRecord>> = groups
        .par_iter()
        .map(|(anchor, comparisons)| {
            let q = qs
                .get(&anchor.question_id)
                .ok_or_else(|| f(&format!("unknown question {}", anchor.question_id)))?;
            comparisons
                .iter()
                .map(|c| classify_discrepancy(q, anchor, c, chat.as_ref()).map_err(|e| f(&e)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let flat: Vec<DiscrepancyRecord> = records.into_iter().flatten().collect();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &flat {
        *counts.entry(r.label.short()).or_default() += 1;
    }
    write_jsonl(&out.join("discrepancies.jsonl"), &flat)?;
    let summary: Vec<String> = counts.iter().map(|(k, v)| format!("{k} {v}")).collect();
    Ok(Some(format!("{} records: {}", flat.len(), summary.join(", "))))
}

pub fn load_discrepancies(project: &Project) -> Result<Vec<DiscrepancyRecord>> {
    read_jsonl(&artifact(project, Stage::Detect, "discrepancies.jsonl"))
}

// ---------------------------------------------------------------- export

fn review_state_name(s: &ReviewState) -> &'static str {
    match s {
        ReviewState::Pending => "pending",
        ReviewState::Confirmed => "confirmed",
        ReviewState::Relabeled(_) => "relabeled",
        ReviewState::Rejected => "rejected",
    }
}

pub fn export_records(project: &Project, reviews: &ReviewStates) -> Result<Vec<ExportRecord>> {
    let lookup = TextLookup::new(project)?;
    let questions: HashMap<String, Question> = load_questions(project)?
        .into_iter()
        .map(|q| (q.id.clone(), q))
        .collect();
    let answers: HashMap<String, Answer> = load_answers(project)?.into_iter().map(|a| (a.id.clone(), a)).collect();
    let mut out = Vec::new();
    for mut r in load_discrepancies(project)? {
        let (state, note) = reviews.discrepancy(&r.id);
        r.review = state;
        r.reviewer_note = note;
        let q = questions.get(&r.question_id);
        let a = answers.get(&r.anchor_answer_id);
        let c = answers.get(&r.comparison_answer_id);
        let anchor_pid = q.map(|q| q.passage_id.clone()).unwrap_or_default();
        let comparison_pid = c.map(|c| c.passage_id.clone()).unwrap_or_default();
        out.push(ExportRecord {
            question: q.map(|q| q.text.clone()).unwrap_or_default(),
            anchor_passage: lookup.text(&anchor_pid).to_string(),
            anchor_answer: a.map(|a| a.text.clone()).unwrap_or_default(),
            comparison_passage: lookup.text(&comparison_pid).to_string(),
            comparison_answer: c.map(|c| c.text.clone()).unwrap_or_default(),
            model_label: r.label.as_str().to_string(),
            label: r.effective_label().as_str().to_string(),
            reason: r.reason.clone(),
            review_state: review_state_name(&r.review).to_string(),
            reviewer_note: r.reviewer_note.clone(),
            id: r.id,
            question_id: r.question_id,
            anchor_passage_id: anchor_pid,
            comparison_passage_id: comparison_pid,
        });
    }
    Ok(out)
}

fn export(project: &Project, out: &Path) -> Result<Option<String>> {
    let records: Vec<ExportRecord> = export_records(project, &project.reviews()?)?
        .into_iter()
        .filter(|r| r.review_state != "rejected")
        .collect();
    std::fs::write(out.join("results.jsonl"), to_jsonl(&records))?;
    Ok(Some(format!("{} records", records.len())))
}
