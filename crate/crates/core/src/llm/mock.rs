//! Deterministic offline providers for tests, demos and the bundled synthetic corpus.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::prompts::Template;
use super::provider::{ChatProvider, ChatRequest, NliLabel, NliProvider};
use super::tasks::{ABSTENTION_SENTINEL, SHORT_ABSTENTION_SENTINEL};
use super::LlmError;

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "of", "in", "on", "to", "and", "or", "is", "are", "was", "were", "be", "it", "that", "this",
    "true", "for", "with", "as", "by", "at", "do", "does", "can", "should", "yes", "el", "la", "los", "las", "de",
    "en", "y", "o", "es", "son", "que", "un", "una", "por", "con",
];

const NEGATIONS: &[&str] = &["not", "no", "never", "nunca", "without", "sin", "nicht", "kein"];

const CULTURAL_MARKERS: &[&str] = &[
    "tradition",
    "traditionally",
    "traditional",
    "custom",
    "customary",
    "culture",
    "cultural",
    "region",
    "regional",
    "locally",
    "commonly",
    "typically",
];

fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
}

fn is_negated(text: &str) -> bool {
    words(text).any(|w| NEGATIONS.contains(&w.as_str()))
}

/// `NAME: value` fields of the prompt's final task section; values may span lines.
fn task_fields(prompt: &str) -> BTreeMap<String, String> {
    let section = prompt
        .rsplit_once("#### YOUR TASK ####")
        .map(|(_, s)| s)
        .unwrap_or(prompt);
    let mut fields: BTreeMap<String, String> = BTreeMap::new();
    let mut current: Option<String> = None;
    for line in section.lines() {
        let key = line.split_once(':').and_then(|(k, v)| {
            let k = k.trim();
            let is_key = !k.is_empty()
                && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                && k.chars().next().is_some_and(|c| c.is_ascii_uppercase());
            is_key.then(|| (k.to_string(), v.trim().to_string()))
        });
        match key {
            Some((k, v)) => {
                fields.insert(k.clone(), v);
                current = Some(k);
            }
            None => {
                let t = line.trim();
                if t.is_empty() {
                    current = None;
                } else if let Some(k) = &current {
                    {
                        let v = fields.get_mut(k).expect("current key present");
                        if !v.is_empty() {
                            v.push(' ');
                        }
                        v.push_str(t);
                    }
                }
            }
        }
    }
    fields
}

fn detect_template(prompt: &str) -> Option<Template> {
    Template::ALL.into_iter().find(|t| {
        let text = t.text();
        let head = &text[..text.find('{').unwrap_or(text.len()).min(60)];
        prompt.starts_with(head)
    })
}

/// Rule-based stand-in for a chat model. It recognises which shipped template produced
/// the prompt and answers from lexical overlap, so pipelines run without a network.
///
/// An optional glossary maps foreign words onto anchor-language words before overlap
/// is computed, which lets the mock answer questions against comparison passages.
#[derive(Debug, Default)]
pub struct MockChat {
    glossary: BTreeMap<String, String>,
    calls: AtomicUsize,
}

impl MockChat {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_glossary(glossary: BTreeMap<String, String>) -> Self {
        Self {
            glossary,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn content_words(&self, text: &str) -> BTreeSet<String> {
        words(text)
            .map(|w| self.glossary.get(&w).cloned().unwrap_or(w))
            .filter(|w| !STOPWORDS.contains(&w.as_str()) && !NEGATIONS.contains(&w.as_str()))
            .collect()
    }

    fn negated(&self, text: &str) -> bool {
        words(text).any(|w| {
            let w = self.glossary.get(&w).cloned().unwrap_or(w);
            NEGATIONS.contains(&w.as_str())
        })
    }

    /// Fraction of the question's content words found in the passage.
    fn coverage(&self, question: &str, passage: &str) -> f64 {
        let q = self.content_words(question);
        if q.is_empty() {
            return 0.0;
        }
        let p = self.content_words(passage);
        q.intersection(&p).count() as f64 / q.len() as f64
    }

    fn questions(&self, passage: &str) -> String {
        let sentences: Vec<&str> = passage
            .split(['.', '!', '?', '\n'])
            .map(str::trim)
            .filter(|s| s.split_whitespace().count() >= 4)
            .collect();
        if sentences.is_empty() {
            return "N/A, the passage is too short to contain verifiable facts.".to_string();
        }
        sentences
            .iter()
            .take(2)
            .map(|s| format!("Is it true that {}?", lower_first(s)))
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn query(&self, question: &str) -> String {
        let core = question
            .trim()
            .trim_end_matches('?')
            .trim_start_matches("Is it true that ")
            .to_string();
        let short: Vec<String> = self.content_words(&core).into_iter().take(4).collect();
        format!("\"{core}; {}\"", short.join(" "))
    }

    fn answer(&self, question: &str, passage: &str) -> String {
        if self.coverage(question, passage) < 0.5 {
            return ABSTENTION_SENTINEL.to_string();
        }
        let flipped = self.negated(question) != self.negated(passage);
        let evidence = passage.trim();
        if flipped {
            format!("No. {evidence}")
        } else {
            format!("Yes. {evidence}")
        }
    }

    fn discrepancy(&self, a1: &str, a2: &str) -> String {
        let abstained = |a: &str| {
            let t = a.trim_start();
            t.starts_with(ABSTENTION_SENTINEL) || t.starts_with(SHORT_ABSTENTION_SENTINEL)
        };
        let polarity = |a: &str| {
            let first = words(a).next().unwrap_or_default();
            match first.as_str() {
                "yes" | "si" | "ja" => Some(true),
                "no" | "nein" => Some(false),
                _ => None,
            }
        };
        let (label, reason) = match (abstained(a1) || abstained(a2), polarity(a1), polarity(a2)) {
            (true, _, _) | (false, None, _) | (false, _, None) => {
                ("NOT_ENOUGH_INFO", "At least one answer does not address the question.")
            }
            (false, Some(p1), Some(p2)) if p1 == p2 => ("NO_DISCREPANCY", "Both answers agree."),
            _ => {
                let cultural = words(a1).chain(words(a2)).any(|w| {
                    let w = self.glossary.get(&w).map(String::as_str).unwrap_or(&w);
                    CULTURAL_MARKERS.contains(&w)
                });
                if cultural {
                    (
                        "CULTURAL_DISCREPANCY",
                        "The answers reflect different cultural practices.",
                    )
                } else {
                    ("CONTRADICTION", "The answers assert opposing facts.")
                }
            }
        };
        format!("- REASON: {reason}\n- DISCREPANCY_TYPE: {label}")
    }

    fn respond(&self, prompt: &str) -> String {
        let Some(template) = detect_template(prompt) else {
            return String::new();
        };
        let f = task_fields(prompt);
        let get = |k: &str| f.get(k).map(String::as_str).unwrap_or("");
        match template {
            Template::TopicLabeling => {
                let keywords = prompt
                    .lines()
                    .find_map(|l| l.strip_prefix("Keywords:"))
                    .unwrap_or("");
                let first: Vec<&str> = keywords
                    .split(',')
                    .map(str::trim)
                    .filter(|w| !w.is_empty())
                    .take(2)
                    .collect();
                if first.is_empty() {
                    "Miscellaneous".to_string()
                } else {
                    first.join(" and ")
                }
            }
            Template::QuestionGeneration => self.questions(get("PASSAGE")),
            Template::QueryGeneration => self.query(get("QUESTION")),
            Template::RelevanceJudgment => {
                if self.coverage(get("QUESTION"), get("PASSAGE")) >= 0.5 {
                    "YES".to_string()
                } else {
                    "NO".to_string()
                }
            }
            Template::AnswerGeneration => self.answer(get("QUESTION"), get("PASSAGE")),
            Template::DiscrepancyDetection => self.discrepancy(get("ANSWER_1"), get("ANSWER_2")),
            Template::FeverConversion => {
                let claim = get("CLAIM").trim_end_matches('.');
                let refutes = get("LABEL").eq_ignore_ascii_case("REFUTES");
                format!(
                    "QUESTION: Is it true that {}?\nANSWER1: Yes, {}.\nANSWER2: {}, {}",
                    lower_first(claim),
                    lower_first(claim),
                    if refutes { "No" } else { "Yes" },
                    lower_first(get("EVIDENCE")),
                )
            }
            Template::DplaceConversion => format!(
                "QUESTION: Is the following typical: {}?\nANSWER1: No, traditionally {}.\nANSWER2: Yes, traditionally {}.",
                lower_first(get("DEFINITION").trim_end_matches('.')),
                lower_first(get("EXAMPLE1").trim_end_matches('.')),
                lower_first(get("EXAMPLE2").trim_end_matches('.')),
            ),
            Template::Nli => "ENTAILMENT".to_string(),
            Template::Translation => get("TEXT").to_string(),
        }
    }
}

fn lower_first(s: &str) -> String {
    let s = s.trim();
    let mut chars = s.chars();
    match chars.next() {
        // Keep acronyms such as "MIS-C" intact.
        Some(_) if chars.clone().next().is_some_and(|n| n.is_uppercase()) => s.to_string(),
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

impl ChatProvider for MockChat {
    fn provider_id(&self) -> &str {
        "mock"
    }
    fn model_name(&self) -> &str {
        "mock-lexical"
    }
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(self.respond(&request.prompt))
    }
}

/// Replays canned responses. Rules match by substring of the prompt; each rule and the
/// fallback sequence advance independently and repeat their final entry when exhausted.
#[derive(Debug, Default)]
pub struct ScriptedChat {
    rules: Vec<(String, Vec<String>, AtomicUsize)>,
    fallback: Vec<String>,
    fallback_pos: AtomicUsize,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedChat {
    pub fn always(response: impl Into<String>) -> Self {
        Self::sequence([response])
    }

    pub fn sequence<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        Self {
            fallback: responses.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    pub fn rule<S: Into<String>>(mut self, needle: impl Into<String>, responses: impl IntoIterator<Item = S>) -> Self {
        self.rules.push((
            needle.into(),
            responses.into_iter().map(Into::into).collect(),
            AtomicUsize::new(0),
        ));
        self
    }

    pub fn calls(&self) -> usize {
        self.prompts.lock().expect("prompt log").len()
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().expect("prompt log").clone()
    }
}

fn next_of(list: &[String], pos: &AtomicUsize) -> Option<String> {
    let i = pos.fetch_add(1, Ordering::SeqCst);
    list.get(i.min(list.len().saturating_sub(1))).cloned()
}

impl ChatProvider for ScriptedChat {
    fn provider_id(&self) -> &str {
        "scripted"
    }
    fn model_name(&self) -> &str {
        "scripted"
    }
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        self.prompts.lock().expect("prompt log").push(request.prompt.clone());
        let hit = self
            .rules
            .iter()
            .find(|(needle, _, _)| request.prompt.contains(needle.as_str()));
        let out = match hit {
            Some((_, list, pos)) => next_of(list, pos),
            None => next_of(&self.fallback, &self.fallback_pos),
        };
        out.ok_or_else(|| LlmError::Provider("no scripted response".into()))
    }
}

/// Always returns the same label.
#[derive(Debug, Clone, Copy)]
pub struct FixedNli(pub NliLabel);

impl NliProvider for FixedNli {
    fn classify(&self, _premise: &str, _hypothesis: &str) -> Result<NliLabel, LlmError> {
        Ok(self.0)
    }
}

/// Entails on overlapping content with equal negation parity, contradicts on overlap
/// with opposite parity, neutral otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalNli;

impl NliProvider for LexicalNli {
    fn classify(&self, premise: &str, hypothesis: &str) -> Result<NliLabel, LlmError> {
        let content = |t: &str| -> BTreeSet<String> {
            words(t)
                .filter(|w| !STOPWORDS.contains(&w.as_str()) && !NEGATIONS.contains(&w.as_str()))
                .collect()
        };
        let h = content(hypothesis);
        let p = content(premise);
        if h.is_empty() || (h.intersection(&p).count() as f64) < 0.5 * h.len() as f64 {
            return Ok(NliLabel::Neutral);
        }
        Ok(if is_negated(premise) == is_negated(hypothesis) {
            NliLabel::Entail
        } else {
            NliLabel::Contradict
        })
    }
}
