use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::CorpusError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_uri: Option<String>,
    pub raw_text: String,
    /// Set on machine translations: the id of the original document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation_of: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, language: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            language: language.into(),
            source_uri: None,
            raw_text: text.into(),
            translation_of: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    pub document_id: String,
    pub language: String,
    pub text: String,
    #[serde(default)]
    pub tokens: Vec<String>,
    pub index_in_document: usize,
}

impl Passage {
    pub fn make_id(document_id: &str, index: usize) -> String {
        format!("{document_id}#{index}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusRole {
    Anchor,
    Comparison,
    /// Machine translations used only to establish topic-space alignment.
    Translation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub id: String,
    pub language: String,
    pub role: CorpusRole,
    pub documents: Vec<Document>,
}

impl Corpus {
    pub fn new(
        id: impl Into<String>,
        language: impl Into<String>,
        role: CorpusRole,
        documents: Vec<Document>,
    ) -> Result<Self, CorpusError> {
        let mut seen = std::collections::HashSet::new();
        for d in &documents {
            if d.raw_text.trim().is_empty() {
                return Err(CorpusError::EmptyDocument(d.id.clone()));
            }
            if !seen.insert(d.id.as_str()) {
                return Err(CorpusError::DuplicateDocument(d.id.clone()));
            }
        }
        Ok(Self {
            id: id.into(),
            language: language.into(),
            role,
            documents,
        })
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleMember {
    pub corpus_id: String,
    pub document_id: String,
    pub language: String,
    /// Translations only anchor the topic space and are discarded after training.
    #[serde(default)]
    pub synthetic: bool,
}

/// Documents in different languages assumed to share one topic distribution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tuple {
    pub members: Vec<TupleMember>,
}

/// Per-language vocabulary with a stable word order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(words: Vec<String>) -> Self {
        Self::from_words(words)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.words
    }
}

impl Vocabulary {
    pub fn from_words(words: Vec<String>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Self { words, index }
    }

    /// Sorted, deduplicated vocabulary over all tokens.
    pub fn build<'a>(tokens: impl IntoIterator<Item = &'a String>) -> Self {
        let set: std::collections::BTreeSet<&String> = tokens.into_iter().collect();
        Self::from_words(set.into_iter().cloned().collect())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}
