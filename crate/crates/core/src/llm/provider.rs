use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LlmError;

/// Sampling parameters sent with every completion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    pub temperature: f64,
    pub top_p: f64,
    pub frequency_penalty: f64,
    pub seed: u64,
}

impl Default for Decoding {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            top_p: 0.1,
            frequency_penalty: 0.0,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    pub prompt: String,
    pub decoding: Decoding,
    /// Retry counter; part of the cache key so a retry is not served from cache.
    #[serde(default)]
    pub attempt: u32,
}

impl ChatRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        Self {
            system: None,
            prompt: prompt.into(),
            decoding: Decoding::default(),
            attempt: 0,
        }
    }

    pub fn with_attempt(mut self, attempt: u32) -> Self {
        self.attempt = attempt;
        self
    }

    /// Hex SHA-256 over everything that determines the response.
    pub fn idempotency_key(&self, provider_id: &str, model: &str) -> String {
        let mut h = Sha256::new();
        for part in [provider_id, model, self.system.as_deref().unwrap_or(""), &self.prompt] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        h.update(serde_json::to_vec(&self.decoding).expect("decoding serializes"));
        h.update(self.attempt.to_le_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub trait ChatProvider: Send + Sync {
    fn provider_id(&self) -> &str;
    fn model_name(&self) -> &str;
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError>;
}

impl<P: ChatProvider + ?Sized> ChatProvider for std::sync::Arc<P> {
    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }
    fn model_name(&self) -> &str {
        (**self).model_name()
    }
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NliLabel {
    Entail,
    Neutral,
    Contradict,
}

pub trait NliProvider: Send + Sync {
    fn classify(&self, premise: &str, hypothesis: &str) -> Result<NliLabel, LlmError>;
}

impl<P: NliProvider + ?Sized> NliProvider for std::sync::Arc<P> {
    fn classify(&self, premise: &str, hypothesis: &str) -> Result<NliLabel, LlmError> {
        (**self).classify(premise, hypothesis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoding_defaults() {
        let d = Decoding::default();
        assert_eq!((d.temperature, d.top_p, d.frequency_penalty), (0.0, 0.1, 0.0));
    }

    #[test]
    fn key_depends_on_attempt_and_prompt() {
        let a = ChatRequest::new("p");
        assert_eq!(a.idempotency_key("x", "m"), a.clone().idempotency_key("x", "m"));
        assert_ne!(
            a.idempotency_key("x", "m"),
            a.clone().with_attempt(1).idempotency_key("x", "m")
        );
        assert_ne!(
            a.idempotency_key("x", "m"),
            ChatRequest::new("q").idempotency_key("x", "m")
        );
        assert_eq!(a.idempotency_key("x", "m").len(), 64);
    }
}
