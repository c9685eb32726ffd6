//! Question generation, entailment screening, query decomposition, grounded
//! answering and discrepancy classification.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::prompts::Template;
use super::provider::{ChatProvider, ChatRequest, NliLabel, NliProvider};
use super::{with_parse_retry, LlmError};
use crate::corpus::Document;

/// Exact answer text signalling that the evidence does not answer the question.
pub const ABSTENTION_SENTINEL: &str = "I cannot answer the question given the context.";
/// Shorter variant that the answer template's closing instruction asks for.
pub const SHORT_ABSTENTION_SENTINEL: &str = "I cannot answer given the context.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionStatus {
    Generated,
    NliRejected,
    Active,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub passage_id: String,
    pub text: String,
    pub status: QuestionStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum QuestionOutcome {
    Questions(Vec<Question>),
    NotSuitable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubQuery {
    pub question_id: String,
    pub text: String,
    /// 1-based position within the question's decomposition.
    pub order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerSide {
    Anchor,
    Comparison,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub id: String,
    pub question_id: String,
    pub passage_id: String,
    pub side: AnswerSide,
    pub text: String,
    pub abstained: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiscrepancyLabel {
    NoDiscrepancy,
    Contradiction,
    CulturalDiscrepancy,
    NotEnoughInfo,
}

impl DiscrepancyLabel {
    pub const ALL: [DiscrepancyLabel; 4] = [
        DiscrepancyLabel::NoDiscrepancy,
        DiscrepancyLabel::Contradiction,
        DiscrepancyLabel::CulturalDiscrepancy,
        DiscrepancyLabel::NotEnoughInfo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DiscrepancyLabel::NoDiscrepancy => "NO_DISCREPANCY",
            DiscrepancyLabel::Contradiction => "CONTRADICTION",
            DiscrepancyLabel::CulturalDiscrepancy => "CULTURAL_DISCREPANCY",
            DiscrepancyLabel::NotEnoughInfo => "NOT_ENOUGH_INFO",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            DiscrepancyLabel::NoDiscrepancy => "ND",
            DiscrepancyLabel::Contradiction => "CON",
            DiscrepancyLabel::CulturalDiscrepancy => "CD",
            DiscrepancyLabel::NotEnoughInfo => "NEI",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for DiscrepancyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DiscrepancyLabel {
    type Err = String;

    /// Accepts long names in any case, with spaces or underscores, and the short codes.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric() || *c == '_' || *c == ' ')
            .collect::<String>()
            .trim()
            .to_ascii_uppercase()
            .replace(' ', "_");
        match norm.as_str() {
            "NO_DISCREPANCY" | "ND" => Ok(DiscrepancyLabel::NoDiscrepancy),
            "CONTRADICTION" | "CON" => Ok(DiscrepancyLabel::Contradiction),
            "CULTURAL_DISCREPANCY" | "CD" => Ok(DiscrepancyLabel::CulturalDiscrepancy),
            "NOT_ENOUGH_INFO" | "NEI" => Ok(DiscrepancyLabel::NotEnoughInfo),
            _ => Err(format!("unknown discrepancy label {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state", content = "label")]
pub enum ReviewState {
    Pending,
    Confirmed,
    Relabeled(DiscrepancyLabel),
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscrepancyRecord {
    pub id: String,
    pub question_id: String,
    pub anchor_answer_id: String,
    pub comparison_answer_id: String,
    pub label: DiscrepancyLabel,
    pub reason: String,
    pub review: ReviewState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reviewer_note: Option<String>,
}

impl DiscrepancyRecord {
    /// Label after human review; the predicted label unless relabeled.
    pub fn effective_label(&self) -> DiscrepancyLabel {
        match self.review {
            ReviewState::Relabeled(l) => l,
            _ => self.label,
        }
    }
}

const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "am", "do", "does", "did", "can", "could", "will", "would", "should", "shall", "may",
    "might", "must", "has", "have", "had", "isn't", "aren't", "don't", "doesn't", "can't", "won't",
];

fn first_word(text: &str) -> String {
    text.split_whitespace()
        .next()
        .unwrap_or("")
        .to_lowercase()
        .replace('’', "'")
}

fn is_yes_no_question(line: &str) -> bool {
    AUXILIARIES.contains(&first_word(line).as_str())
}

fn bullet_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(?:[-*•]|\d+[.)])\s*").unwrap())
}

fn strip_label<'a>(text: &'a str, label: &str) -> &'a str {
    let t = text.trim();
    if t.len() >= label.len() && t[..label.len()].eq_ignore_ascii_case(label) {
        t[label.len()..].trim_start()
    } else {
        t
    }
}

/// Either question texts or the reason the passage is unsuitable.
pub fn parse_questions(output: &str) -> Result<Result<Vec<String>, String>, LlmError> {
    let body = strip_label(output, "QUESTIONS:");
    if body.len() >= 3 && body[..3].eq_ignore_ascii_case("n/a") {
        let reason = body[3..]
            .trim_start_matches(|c: char| c == ',' || c == ':' || c == '.' || c == '-' || c.is_whitespace())
            .trim()
            .to_string();
        return Ok(Err(reason));
    }
    let questions: Vec<String> = body
        .lines()
        .map(|l| bullet_regex().replace(l, "").trim().to_string())
        .filter(|l| !l.is_empty() && is_yes_no_question(l))
        .collect();
    if questions.is_empty() {
        return Err(LlmError::Parse {
            task: "question_generation",
            output: output.to_string(),
        });
    }
    Ok(Ok(questions))
}

pub fn generate_questions(
    passage_id: &str,
    passage: &str,
    document_excerpt: &str,
    chat: &dyn ChatProvider,
) -> Result<QuestionOutcome, LlmError> {
    if passage.trim().is_empty() {
        return Err(LlmError::Precondition(format!("passage {passage_id} is empty")));
    }
    let prompt = Template::QuestionGeneration.render(&[("passage", passage), ("full_document", document_excerpt)])?;
    let parsed = with_parse_retry(|attempt| {
        let out = chat.complete(&ChatRequest::new(prompt.clone()).with_attempt(attempt))?;
        parse_questions(&out)
    })?;
    Ok(match parsed {
        Err(reason) => QuestionOutcome::NotSuitable(reason),
        Ok(texts) => QuestionOutcome::Questions(
            texts
                .into_iter()
                .enumerate()
                .map(|(n, text)| Question {
                    id: format!("{passage_id}/q{n}"),
                    passage_id: passage_id.to_string(),
                    text,
                    status: QuestionStatus::Generated,
                })
                .collect(),
        ),
    })
}

/// Declarative restatement of a yes/no question: the leading auxiliary and the
/// question mark are dropped.
pub fn affirmative_hypothesis(question: &str) -> String {
    let q = question.trim().trim_end_matches('?').trim();
    let rest = match q.split_once(char::is_whitespace) {
        Some((first, rest)) if is_yes_no_question(first) => rest.trim(),
        _ => q,
    };
    let mut chars = rest.chars();
    let capitalized: String = match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    };
    format!("{capitalized}.")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NliVerdict {
    Entailed,
    Rejected,
}

/// Discards a question only when the anchor passage contradicts it.
pub fn nli_filter(
    question: &mut Question,
    anchor_passage: &str,
    nli: &dyn NliProvider,
) -> Result<NliVerdict, LlmError> {
    let label = nli.classify(anchor_passage, &affirmative_hypothesis(&question.text))?;
    let verdict = if label == NliLabel::Contradict {
        question.status = QuestionStatus::NliRejected;
        NliVerdict::Rejected
    } else {
        question.status = QuestionStatus::Active;
        NliVerdict::Entailed
    };
    Ok(verdict)
}

pub fn parse_subqueries(output: &str) -> Vec<String> {
    let body = strip_label(output, "SEARCH_QUERY:");
    let body = body.trim().trim_matches('"');
    body.split(';')
        .map(|s| s.trim().trim_matches('"').trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Splits the model's search queries; falls back to the question itself when none remain.
pub fn decompose_query(passage: &str, question: &Question, chat: &dyn ChatProvider) -> Result<Vec<SubQuery>, LlmError> {
    let prompt = Template::QueryGeneration.render(&[("passage", passage), ("question", &question.text)])?;
    let out = chat.complete(&ChatRequest::new(prompt))?;
    let mut texts = parse_subqueries(&out);
    if texts.is_empty() {
        texts.push(question.text.clone());
    }
    Ok(texts
        .into_iter()
        .enumerate()
        .map(|(i, text)| SubQuery {
            question_id: question.id.clone(),
            text,
            order: i + 1,
        })
        .collect())
}

/// Exact-prefix abstention check after trimming surrounding whitespace.
pub fn is_abstention(text: &str) -> bool {
    let t = text.trim_start();
    t.starts_with(ABSTENTION_SENTINEL) || t.starts_with(SHORT_ABSTENTION_SENTINEL)
}

/// Answers `question` from one evidence passage. Questions are always posed in the
/// anchor language, whatever the evidence language.
pub fn generate_answer(
    question: &Question,
    passage_id: &str,
    passage: &str,
    document_excerpt: &str,
    side: AnswerSide,
    chat: &dyn ChatProvider,
) -> Result<Answer, LlmError> {
    if passage.trim().is_empty() {
        return Err(LlmError::Precondition(format!(
            "evidence passage {passage_id} is empty"
        )));
    }
    let prompt = Template::AnswerGeneration.render(&[
        ("question", &question.text),
        ("passage", passage),
        ("full_document", document_excerpt),
    ])?;
    let out = chat.complete(&ChatRequest::new(prompt))?;
    let text = strip_label(&out, "ANSWER:").to_string();
    let abstained = is_abstention(&text);
    let side_tag = match side {
        AnswerSide::Anchor => "a",
        AnswerSide::Comparison => "c",
    };
    Ok(Answer {
        id: format!("{}/{side_tag}/{passage_id}", question.id),
        question_id: question.id.clone(),
        passage_id: passage_id.to_string(),
        side,
        text: if abstained {
            ABSTENTION_SENTINEL.to_string()
        } else {
            text
        },
        abstained,
    })
}

/// Reads the `REASON:` and `DISCREPANCY_TYPE:` lines of a classification.
pub fn parse_discrepancy(output: &str) -> Result<(String, DiscrepancyLabel), LlmError> {
    let err = || LlmError::Parse {
        task: "discrepancy_detection",
        output: output.to_string(),
    };
    let mut reason = String::new();
    let mut label = None;
    let mut in_reason = false;
    for line in output.lines() {
        let l = bullet_regex().replace(line, "");
        let l = l.trim();
        let upper = l.to_ascii_uppercase();
        if let Some(i) = upper.find("DISCREPANCY_TYPE:") {
            let value = &l[i + "DISCREPANCY_TYPE:".len()..];
            label = Some(value.parse::<DiscrepancyLabel>().map_err(|_| err())?);
            in_reason = false;
        } else if upper.starts_with("REASON:") {
            reason = l["REASON:".len()..].trim().to_string();
            in_reason = true;
        } else if in_reason && !l.is_empty() {
            reason.push(' ');
            reason.push_str(l);
        }
    }
    label.map(|l| (reason, l)).ok_or_else(err)
}

/// Classifies the relation between the anchor and comparison answers.
///
/// An abstained answer on either side yields NOT_ENOUGH_INFO without a provider call.
pub fn classify_discrepancy(
    question: &Question,
    anchor: &Answer,
    comparison: &Answer,
    chat: &dyn ChatProvider,
) -> Result<DiscrepancyRecord, LlmError> {
    let record = |label, reason: String| DiscrepancyRecord {
        id: format!("{}/{}", question.id, comparison.passage_id),
        question_id: question.id.clone(),
        anchor_answer_id: anchor.id.clone(),
        comparison_answer_id: comparison.id.clone(),
        label,
        reason,
        review: ReviewState::Pending,
        reviewer_note: None,
    };
    if comparison.abstained || anchor.abstained {
        let side = if comparison.abstained { "comparison" } else { "anchor" };
        return Ok(record(
            DiscrepancyLabel::NotEnoughInfo,
            format!("The {side} evidence does not answer the question."),
        ));
    }
    let prompt = Template::DiscrepancyDetection.render(&[
        ("question", &question.text),
        ("answer_1", &anchor.text),
        ("answer_2", &comparison.text),
    ])?;
    let (reason, label) = with_parse_retry(|attempt| {
        let out = chat.complete(&ChatRequest::new(prompt.clone()).with_attempt(attempt))?;
        parse_discrepancy(&out)
    })?;
    Ok(record(label, reason))
}

/// Machine-translates documents for loose alignment; results carry `translation_of`.
pub fn translate_documents(
    docs: &[Document],
    target_language: &str,
    chat: &dyn ChatProvider,
) -> Result<Vec<Document>, LlmError> {
    docs.iter()
        .map(|d| {
            let prompt = Template::Translation.render(&[("language", target_language), ("text", &d.raw_text)])?;
            let out = chat.complete(&ChatRequest::new(prompt))?;
            let text = strip_label(&out, "TRANSLATION:").to_string();
            if text.is_empty() {
                return Err(LlmError::Parse {
                    task: "translation",
                    output: out,
                });
            }
            Ok(Document {
                id: format!("{}@{target_language}", d.id),
                language: target_language.to_string(),
                source_uri: d.source_uri.clone(),
                raw_text: text,
                translation_of: Some(d.id.clone()),
            })
        })
        .collect()
}
