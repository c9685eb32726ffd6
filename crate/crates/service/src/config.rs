//! Project configuration: one TOML or JSON file plus environment overrides for
//! provider endpoints and keys.

use std::path::Path;

use mind_core::corpus::SegmentMode;
use mind_core::index::{IndexConfig, SearchParams};
use mind_core::pltm::TrainConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ServiceError};
use crate::stage::Stage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    pub anchor_language: String,
    pub comparison_language: String,
    pub segment: SegmentMode,
    pub preprocess: PreprocessSettings,
    pub topics: TopicSettings,
    pub index: IndexConfig,
    pub questions: QuestionSettings,
    pub retrieval: SearchParams,
    pub providers: Providers,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        Self {
            anchor_language: "en".into(),
            comparison_language: "es".into(),
            segment: SegmentMode::Newline,
            preprocess: PreprocessSettings::default(),
            topics: TopicSettings::default(),
            index: IndexConfig::default(),
            questions: QuestionSettings::default(),
            retrieval: SearchParams::default(),
            providers: Providers::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSettings {
    /// Extra stopwords per language.
    pub stopwords: std::collections::BTreeMap<String, Vec<String>>,
    /// Passages with fewer tokens are left out of training.
    pub min_tokens: usize,
}

impl Default for PreprocessSettings {
    fn default() -> Self {
        Self {
            stopwords: Default::default(),
            min_tokens: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopicSettings {
    #[serde(flatten)]
    pub train: TrainConfig,
    pub n_keywords: usize,
    pub docs_per_topic: usize,
}

impl Default for TopicSettings {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            n_keywords: 10,
            docs_per_topic: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuestionSettings {
    /// Cap on anchor passages used for question generation; `None` uses all.
    pub max_passages: Option<usize>,
    pub sample_seed: u64,
    /// Drop questions the anchor passage contradicts.
    pub nli_filter: bool,
    /// Characters of the surrounding document passed as context.
    pub excerpt_chars: usize,
}

impl Default for QuestionSettings {
    fn default() -> Self {
        Self {
            max_passages: None,
            sample_seed: 42,
            nli_filter: true,
            excerpt_chars: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChatSettings {
    /// Offline rule-based provider; reads `glossary.json` from the project if present.
    Mock,
    /// OpenAI-compatible chat completions endpoint.
    Http {
        url: String,
        model: String,
        /// Name of the environment variable holding the API key.
        #[serde(default)]
        api_key_env: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NliSettings {
    /// Word-overlap entailment heuristic.
    Lexical,
    /// The configured chat provider answering the NLI prompt.
    Chat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbeddingSettings {
    /// Feature hashing; uses the project glossary if present.
    Hashing { dim: usize, seed: u64 },
    /// Service accepting `{"texts": [...]}` and returning `{"vectors": [[...]]}`.
    Http { url: String, dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Providers {
    pub chat: ChatSettings,
    pub nli: NliSettings,
    pub embedding: EmbeddingSettings,
    /// Cache chat responses on disk under the project directory.
    pub cache: bool,
}

impl Default for Providers {
    fn default() -> Self {
        Self {
            chat: ChatSettings::Mock,
            nli: NliSettings::Lexical,
            embedding: EmbeddingSettings::Hashing { dim: 256, seed: 7 },
            cache: true,
        }
    }
}

impl ProjectConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    /// Reads `.json` files as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Applies `MIND_CHAT_URL`, `MIND_CHAT_MODEL`, `MIND_EMBED_URL` and `MIND_EMBED_DIM`.
    /// A chat URL switches a mock chat provider to HTTP.
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(url) = var("MIND_CHAT_URL") {
            let model = var("MIND_CHAT_MODEL");
            self.providers.chat = match std::mem::replace(&mut self.providers.chat, ChatSettings::Mock) {
                ChatSettings::Http {
                    model: m, api_key_env, ..
                } => ChatSettings::Http {
                    url,
                    model: model.unwrap_or(m),
                    api_key_env,
                },
                ChatSettings::Mock => ChatSettings::Http {
                    url,
                    model: model.ok_or_else(|| ServiceError::Config("MIND_CHAT_URL needs MIND_CHAT_MODEL".into()))?,
                    api_key_env: Some("MIND_CHAT_API_KEY".into()),
                },
            };
        } else if let (Some(m), ChatSettings::Http { model, .. }) = (var("MIND_CHAT_MODEL"), &mut self.providers.chat) {
            *model = m;
        }
        if let Some(url) = var("MIND_EMBED_URL") {
            let dim = match var("MIND_EMBED_DIM") {
                Some(d) => d
                    .parse()
                    .map_err(|_| ServiceError::Config(format!("MIND_EMBED_DIM = {d:?}")))?,
                None => match &self.providers.embedding {
                    EmbeddingSettings::Hashing { dim, .. } | EmbeddingSettings::Http { dim, .. } => *dim,
                },
            };
            self.providers.embedding = EmbeddingSettings::Http { url, dim };
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ServiceError::Config(m));
        if self.anchor_language == self.comparison_language {
            return bad("anchor and comparison languages must differ".into());
        }
        if self.topics.train.k == 0 {
            return bad("topics.k must be at least 1".into());
        }
        if self.retrieval.l == 0 || self.retrieval.h == 0 {
            return bad("retrieval.l and retrieval.h must be at least 1".into());
        }
        if self.topics.n_keywords == 0 {
            return bad("topics.n_keywords must be at least 1".into());
        }
        Ok(())
    }

    /// Digest of the settings a stage reads; a change makes the stage's output stale.
    pub fn stage_hash(&self, stage: Stage) -> String {
        let chat = serde_json::to_value(&self.providers.chat).unwrap();
        let section = match stage {
            Stage::Ingest => serde_json::json!([self.anchor_language, self.comparison_language]),
            Stage::Preprocess => serde_json::json!([self.segment, self.preprocess]),
            Stage::Train => serde_json::to_value(&self.topics.train).unwrap(),
            Stage::Label => serde_json::json!([self.topics.n_keywords, self.topics.docs_per_topic, chat]),
            Stage::Index => serde_json::json!([self.index, self.providers.embedding]),
            Stage::Questions => serde_json::json!([self.questions, chat, self.providers.nli]),
            Stage::Queries | Stage::Answer | Stage::Detect => chat,
            Stage::Retrieve => serde_json::to_value(self.retrieval).unwrap(),
            Stage::Export => serde_json::Value::Null,
        };
        hex(&Sha256::digest(section.to_string().as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
