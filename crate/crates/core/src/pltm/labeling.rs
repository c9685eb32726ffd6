//! Topic keywords and LLM-generated topic labels.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{PltmError, PolyTopicModel};
use crate::corpus::ds_rerank;
use crate::llm::{ChatProvider, ChatRequest, LlmError, Template};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicStatus {
    Active,
    Discarded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicLabel {
    pub topic_id: usize,
    pub label: String,
    pub status: TopicStatus,
    /// Top words per language, most discriminative first.
    pub keywords: BTreeMap<String, Vec<String>>,
    /// Passages with the highest weight on this topic, used to prompt the label.
    pub representative_passages: Vec<String>,
}

/// Inputs for [`label_topics`]: the language whose keywords and passages go into
/// the prompt, and a lookup from passage id to text.
pub struct LabelingInput<'a> {
    pub language: &'a str,
    pub passage_text: &'a HashMap<String, String>,
    pub docs_per_topic: usize,
    pub n_keywords: usize,
}

/// The `n` highest-scoring words of every topic after discriminative re-ranking.
pub fn top_words(model: &PolyTopicModel, language: &str, n: usize) -> Result<Vec<Vec<String>>, PltmError> {
    let beta = model
        .beta
        .get(language)
        .ok_or_else(|| PltmError::UnknownLanguage(language.to_string()))?;
    let vocab = &model.vocabularies[language];
    let ds = ds_rerank(beta).map_err(|e| PltmError::Metadata(e.to_string()))?;
    Ok((0..model.k)
        .map(|k| {
            let row = ds.row(k);
            let mut ids: Vec<usize> = (0..row.len()).collect();
            ids.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            ids.into_iter().take(n).map(|w| vocab.word(w).to_string()).collect()
        })
        .collect())
}

fn representative(model: &PolyTopicModel, language: &str, k: usize, n: usize) -> Vec<String> {
    let mut scored: Vec<(f64, &str)> = model
        .passages
        .iter()
        .enumerate()
        .filter(|(_, p)| p.language == language)
        .map(|(i, p)| (model.theta.get(i, k), p.id.as_str()))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    scored.into_iter().take(n).map(|(_, id)| id.to_string()).collect()
}

fn valid_label(label: &str) -> bool {
    !label.is_empty()
        && !label
            .split(|c: char| !c.is_alphanumeric())
            .any(|w| w.eq_ignore_ascii_case("label"))
}

/// Labels every topic with one chat call. A label that is empty or contains the
/// word "label" is retried once; a second failure is an error for that topic.
pub fn label_topics(
    model: &PolyTopicModel,
    input: &LabelingInput<'_>,
    chat: &dyn ChatProvider,
) -> Result<Vec<TopicLabel>, PltmError> {
    let languages: Vec<String> = model.vocabularies.keys().cloned().collect();
    let mut keywords_by_lang = BTreeMap::new();
    for lang in &languages {
        keywords_by_lang.insert(lang.clone(), top_words(model, lang, input.n_keywords)?);
    }
    let prompt_keywords = keywords_by_lang
        .get(input.language)
        .ok_or_else(|| PltmError::UnknownLanguage(input.language.to_string()))?;

    (0..model.k)
        .map(|k| {
            let reps = representative(model, input.language, k, input.docs_per_topic);
            let docs = reps
                .iter()
                .filter_map(|id| input.passage_text.get(id))
                .enumerate()
                .map(|(i, t)| format!("{}. {}", i + 1, t.trim()))
                .collect::<Vec<_>>()
                .join("\n");
            let prompt = Template::TopicLabeling
                .render(&[("keywords", &prompt_keywords[k].join(", ")), ("docs", &docs)])
                .map_err(|source| PltmError::Labeling { topic: k, source })?;
            let mut label = String::new();
            for attempt in 0..2 {
                let out = chat
                    .complete(&ChatRequest::new(prompt.clone()).with_attempt(attempt))
                    .map_err(|source| PltmError::Labeling { topic: k, source })?;
                label = out.trim().trim_matches('"').trim().to_string();
                if valid_label(&label) {
                    break;
                }
                if attempt == 1 {
                    return Err(PltmError::Labeling {
                        topic: k,
                        source: LlmError::Parse {
                            task: "topic_labeling",
                            output: out,
                        },
                    });
                }
            }
            Ok(TopicLabel {
                topic_id: k,
                label,
                status: TopicStatus::Active,
                keywords: keywords_by_lang
                    .iter()
                    .map(|(l, words)| (l.clone(), words[k].clone()))
                    .collect(),
                representative_passages: reps,
            })
        })
        .collect()
}
