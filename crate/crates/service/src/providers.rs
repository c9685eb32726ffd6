//! Builds the chat, NLI and embedding providers a project is configured with.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use mind_core::index::{EmbeddingProvider, HashingEmbedder, HttpEmbedder};
use mind_core::llm::{CachedChat, ChatNli, ChatProvider, HttpChatProvider, LexicalNli, MockChat, NliProvider};

use crate::config::{ChatSettings, EmbeddingSettings, NliSettings, Providers};
use crate::error::{Result, ServiceError};
use crate::project::Project;

pub struct ProviderSet {
    pub chat: Arc<dyn ChatProvider>,
    pub nli: Arc<dyn NliProvider>,
    pub embedder: Arc<dyn EmbeddingProvider<f32>>,
}

pub fn chat_provider(project: &Project) -> Result<Arc<dyn ChatProvider>> {
    chat_from_settings(
        &project.config().providers,
        project.glossary()?,
        &project.dir().join("cache"),
    )
}

/// Chat provider for `settings`; HTTP responses are cached under `cache_dir` when enabled.
pub fn chat_from_settings(
    settings: &Providers,
    glossary: BTreeMap<String, String>,
    cache_dir: &Path,
) -> Result<Arc<dyn ChatProvider>> {
    Ok(match &settings.chat {
        ChatSettings::Mock => Arc::new(MockChat::with_glossary(glossary)),
        ChatSettings::Http {
            url,
            model,
            api_key_env,
        } => {
            let key = api_key_env.as_deref().and_then(|v| std::env::var(v).ok());
            let http = HttpChatProvider::new(url.clone(), model.clone(), key);
            if settings.cache {
                let cached = CachedChat::open(http, cache_dir.join("chat.jsonl"))
                    .map_err(|e| ServiceError::Config(e.to_string()))?;
                Arc::new(cached)
            } else {
                Arc::new(http)
            }
        }
    })
}

pub fn embedder(project: &Project) -> Result<Arc<dyn EmbeddingProvider<f32>>> {
    Ok(match &project.config().providers.embedding {
        EmbeddingSettings::Hashing { dim, seed } => {
            Arc::new(HashingEmbedder::new(*dim, *seed).with_glossary(project.glossary()?))
        }
        EmbeddingSettings::Http { url, dim } => Arc::new(HttpEmbedder::new(url.clone(), *dim)),
    })
}

pub fn provider_set(project: &Project) -> Result<ProviderSet> {
    let chat = chat_provider(project)?;
    let nli: Arc<dyn NliProvider> = match project.config().providers.nli {
        NliSettings::Lexical => Arc::new(LexicalNli),
        NliSettings::Chat => Arc::new(ChatNli::new(chat.clone())),
    };
    Ok(ProviderSet {
        chat,
        nli,
        embedder: embedder(project)?,
    })
}
